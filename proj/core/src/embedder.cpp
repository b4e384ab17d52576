#include "daud/embedder.hpp"

#include "daud/digest.hpp"
#include "daud/errors.hpp"
#include "daud/jsonl.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>

namespace daud {

namespace {

constexpr size_t kMaxTokens = 256;
constexpr uint64_t kSignBasis = kFnvOffset ^ 0x9e3779b97f4a7c15ull;

std::vector<std::string_view> tokenize(const std::string& text) {
  std::vector<std::string_view> tokens;
  size_t i = 0;
  while (i < text.size() && tokens.size() < kMaxTokens) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.emplace_back(text.data() + start, i - start);
  }
  return tokens;
}

void normalize(std::vector<double>& v, uint64_t fallback_bucket) {
  double norm_sq = 0;
  for (double x : v) norm_sq += x * x;
  if (norm_sq == 0.0) {
    // Signed collisions cancelled everything; fall back to a deterministic basis vector.
    v[fallback_bucket] = 1.0;
    return;
  }
  double inv = 1.0 / std::sqrt(norm_sq);
  for (double& x : v) x *= inv;
}

}  // namespace

std::vector<EmbeddingVector> TextEmbedder::embed_many(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

HashingEmbedder::HashingEmbedder(int dim) : dim_(dim) {
  if (dim <= 0) throw_config("InvalidDimension", "embedder dim must be positive");
}

EmbeddingVector HashingEmbedder::embed(const std::string& text) {
  auto tokens = tokenize(text);
  static const std::string kEmptyToken = "<EMPTY>";
  if (tokens.empty()) tokens.emplace_back(kEmptyToken);

  std::vector<double> acc(static_cast<size_t>(dim_), 0.0);
  for (auto tok : tokens) {
    uint64_t bucket = fnv1a64(tok) % static_cast<uint64_t>(dim_);
    double sign = (fnv1a64(tok, kSignBasis) & 1u) ? 1.0 : -1.0;
    acc[bucket] += sign;
  }
  normalize(acc, fnv1a64(tokens.front()) % static_cast<uint64_t>(dim_));
  return EmbeddingVector{std::move(acc), sha256_hex(text)};
}

HttpEmbedder::HttpEmbedder(std::string endpoint, int dim) : endpoint_(std::move(endpoint)), dim_(dim) {
  if (dim <= 0) throw_config("InvalidDimension", "embedder dim must be positive");
  if (endpoint_.empty()) throw_config("MissingEndpoint", "http embedder requires embedder.endpoint");
}

EmbeddingVector HttpEmbedder::embed(const std::string& text) {
  return embed_many({text}).front();
}

std::vector<EmbeddingVector> HttpEmbedder::embed_many(const std::vector<std::string>& texts) {
  httplib::Client client(endpoint_);
  client.set_read_timeout(30, 0);
  nlohmann::json body{{"texts", texts}};
  auto res = client.Post("/embed", body.dump(), "application/json");
  if (!res || res->status != 200) {
    throw_backend("BackendUnavailable", "embedding endpoint " + endpoint_);
  }
  nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("vectors") || !parsed["vectors"].is_array() ||
      parsed["vectors"].size() != texts.size()) {
    throw_backend("MalformedResponse", "embedding response shape");
  }
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (size_t i = 0; i < texts.size(); ++i) {
    std::vector<double> v = parsed["vectors"][i].get<std::vector<double>>();
    if (static_cast<int>(v.size()) != dim_) {
      throw_config("DimensionMismatch", "endpoint returned dim " + std::to_string(v.size()) +
                                            ", config says " + std::to_string(dim_));
    }
    double norm_sq = 0;
    for (double x : v) norm_sq += x * x;
    if (norm_sq <= 0) throw_backend("MalformedResponse", "zero-norm embedding");
    double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : v) x *= inv;
    out.push_back(EmbeddingVector{std::move(v), sha256_hex(texts[i])});
  }
  return out;
}

EmbeddingVector CachingEmbedder::embed(const std::string& text) {
  std::string digest = sha256_hex(text);
  auto it = by_digest_.find(digest);
  if (it != by_digest_.end()) return it->second;
  EmbeddingVector v = inner_.embed(text);
  by_digest_[digest] = v;
  return v;
}

void CachingEmbedder::save(const std::filesystem::path& path) const {
  std::vector<nlohmann::json> lines;
  for (const auto& [digest, vec] : by_digest_) {
    lines.push_back(nlohmann::json{{"digest", digest}, {"values", vec.values}});
  }
  write_jsonl(path, lines);
}

size_t CachingEmbedder::load(const std::filesystem::path& path) {
  size_t loaded = 0;
  for (const auto& j : read_jsonl(path)) {
    EmbeddingVector vec;
    vec.source_digest = j.at("digest").get<std::string>();
    vec.values = j.at("values").get<std::vector<double>>();
    if (vec.values.size() != static_cast<size_t>(inner_.dim())) {
      throw_data("DimensionMismatch", "cached embedding of dimension " +
                                          std::to_string(vec.values.size()) + ", expected " +
                                          std::to_string(inner_.dim()));
    }
    by_digest_[vec.source_digest] = std::move(vec);
    ++loaded;
  }
  return loaded;
}

std::unique_ptr<TextEmbedder> make_embedder(const EmbedderConfig& config) {
  if (config.kind == "hash") return std::make_unique<HashingEmbedder>(config.dim);
  if (config.kind == "http") return std::make_unique<HttpEmbedder>(config.endpoint, config.dim);
  throw_config("UnknownEmbedder", "embedder.kind '" + config.kind + "'");
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.values.size() != b.values.size()) {
    throw_data("DimensionMismatch", std::to_string(a.values.size()) + " vs " + std::to_string(b.values.size()));
  }
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0 || nb == 0) throw_data("EmptyInput", "cosine of zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace daud

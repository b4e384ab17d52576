#include "daud/digest.hpp"
#include "daud/embedder.hpp"
#include "daud/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace daud;
namespace fs = std::filesystem;

namespace {

// Independent re-implementation of the signed-hashing scheme, kept local so
// the production code is checked against a second derivation rather than
// against itself.
std::vector<double> reference_embed(const std::vector<std::string>& tokens, int dim) {
  auto fnv = [](const std::string& s, uint64_t h) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  };
  const uint64_t offset = 14695981039346656037ull;
  const uint64_t sign_basis = offset ^ 0x9e3779b97f4a7c15ull;

  std::vector<double> acc(dim, 0.0);
  for (const auto& tok : tokens) {
    acc[fnv(tok, offset) % dim] += (fnv(tok, sign_basis) & 1u) ? 1.0 : -1.0;
  }
  double norm = 0;
  for (double x : acc) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0) {
    for (double& x : acc) x /= norm;
  }
  return acc;
}

double l2(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

fs::path temp_file(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("daud_embed_" + tag + ".jsonl");
  fs::remove(p);
  return p;
}

}  // namespace

TEST_CASE("hash embedding matches an independent derivation") {
  HashingEmbedder emb(4);
  EmbeddingVector got = emb.embed("a a b");
  std::vector<double> want = reference_embed({"a", "a", "b"}, 4);
  REQUIRE(got.values.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(got.values[i] == doctest::Approx(want[i]).epsilon(1e-12));
  CHECK(got.source_digest == sha256_hex("a a b"));

  HashingEmbedder wide(64);
  std::vector<std::string> tokens{"alpha", "beta", "gamma", "beta", "w017"};
  EmbeddingVector got_wide = wide.embed("alpha beta gamma beta w017");
  std::vector<double> want_wide = reference_embed(tokens, 64);
  for (int i = 0; i < 64; ++i) CHECK(got_wide.values[i] == doctest::Approx(want_wide[i]).epsilon(1e-12));
}

TEST_CASE("embeddings are unit norm, deterministic, and text sensitive") {
  HashingEmbedder emb(32);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    std::ostringstream text;
    int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) text << "tok" << rng() % 40 << (i + 1 < n ? " " : "");
    EmbeddingVector a = emb.embed(text.str());
    EmbeddingVector b = emb.embed(text.str());
    CHECK(a.values == b.values);
    CHECK(l2(a.values) == doctest::Approx(1.0).epsilon(1e-9));
    for (double x : a.values) CHECK(std::isfinite(x));
  }

  EmbeddingVector alpha = emb.embed("alpha");
  EmbeddingVector beta = emb.embed("beta");
  CHECK(alpha.values != beta.values);
}

TEST_CASE("whitespace runs and empty text are handled") {
  HashingEmbedder emb(16);
  CHECK(emb.embed("a   b").values == emb.embed(" a b ").values);
  CHECK(emb.embed("a\tb\n").values == emb.embed("a b").values);

  EmbeddingVector empty = emb.embed("");
  CHECK(empty.values == emb.embed("<EMPTY>").values);
  CHECK(l2(empty.values) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("input is truncated to the first 256 tokens") {
  HashingEmbedder emb(8);
  std::ostringstream head, extended;
  for (int i = 0; i < 256; ++i) head << "t" << i << " ";
  extended << head.str();
  for (int i = 0; i < 40; ++i) extended << "extra" << i << " ";
  CHECK(emb.embed(head.str()).values == emb.embed(extended.str()).values);
}

TEST_CASE("invalid dimensions are rejected") {
  CHECK_THROWS_AS(HashingEmbedder(0), Error);
  CHECK_THROWS_AS(HashingEmbedder(-3), Error);
}

TEST_CASE("cosine follows the analytic values") {
  EmbeddingVector u{{1.0, 0.0}, ""};
  EmbeddingVector v{{std::sqrt(2.0) / 2, std::sqrt(2.0) / 2}, ""};
  CHECK(cosine(u, u) == doctest::Approx(1.0));
  CHECK(cosine(u, v) == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-12));
  CHECK(cosine(u, EmbeddingVector{{0.0, 1.0}, ""}) == doctest::Approx(0.0));
  CHECK(cosine(u, v) == cosine(v, u));

  EmbeddingVector w{{1.0, 0.0, 0.0}, ""};
  CHECK_THROWS_AS(cosine(u, w), Error);
}

TEST_CASE("make_embedder dispatches on kind") {
  EmbedderConfig hash_cfg{"hash", 12, ""};
  auto hash = make_embedder(hash_cfg);
  CHECK(hash->dim() == 12);
  CHECK(hash->embed("x").values.size() == 12);

  EmbedderConfig unknown{"quantum", 12, ""};
  CHECK_THROWS_AS(make_embedder(unknown), Error);

  EmbedderConfig http_missing{"http", 12, ""};
  CHECK_THROWS_AS(make_embedder(http_missing), Error);
}

TEST_CASE("caching embedder memoizes and persists") {
  HashingEmbedder inner(8);
  CachingEmbedder cache(inner);

  EmbeddingVector first = cache.embed("hello world");
  CHECK(cache.embed("hello world").values == first.values);
  CHECK(cache.size() == 1);
  cache.embed("other text");
  CHECK(cache.size() == 2);

  fs::path path = temp_file("roundtrip");
  cache.save(path);

  HashingEmbedder inner2(8);
  CachingEmbedder warmed(inner2);
  CHECK(warmed.load(path) == 2);
  CHECK(warmed.size() == 2);
  CHECK(warmed.embed("hello world").values == first.values);

  // Loading the same file again merges without duplication.
  CHECK(warmed.load(path) == 2);
  CHECK(warmed.size() == 2);
}

TEST_CASE("caching embedder rejects vectors of the wrong dimension") {
  fs::path path = temp_file("dim");
  {
    HashingEmbedder inner(8);
    CachingEmbedder cache(inner);
    cache.embed("hello");
    cache.save(path);
  }
  HashingEmbedder narrow(4);
  CachingEmbedder mismatched(narrow);
  try {
    mismatched.load(path);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == "DimensionMismatch");
    CHECK(e.kind() == ErrorKind::Data);
  }
}

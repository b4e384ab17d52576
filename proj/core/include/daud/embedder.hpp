#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace daud {

struct EmbedderConfig {
  std::string kind = "hash";  // "hash" | "http"
  int dim = 768;
  std::string endpoint;  // http kind only
};

struct EmbeddingVector {
  std::vector<double> values;   // unit L2 norm
  std::string source_digest;    // sha256 of the input text
};

class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual EmbeddingVector embed(const std::string& text) = 0;
  virtual std::vector<EmbeddingVector> embed_many(const std::vector<std::string>& texts);
  virtual int dim() const = 0;
};

// Deterministic signed feature hashing: whitespace tokens (first 256), bucket
// by FNV-1a mod dim, sign from an independent hash bit, L2-normalized.
// Empty text maps to the reserved token "<EMPTY>".
class HashingEmbedder : public TextEmbedder {
 public:
  explicit HashingEmbedder(int dim);
  EmbeddingVector embed(const std::string& text) override;
  int dim() const override { return dim_; }

 private:
  int dim_;
};

// POSTs {"texts": [...]} to the endpoint and expects {"vectors": [[...]]}.
class HttpEmbedder : public TextEmbedder {
 public:
  HttpEmbedder(std::string endpoint, int dim);
  EmbeddingVector embed(const std::string& text) override;
  std::vector<EmbeddingVector> embed_many(const std::vector<std::string>& texts) override;
  int dim() const override { return dim_; }

 private:
  std::string endpoint_;
  int dim_;
};

// Memoizes by text digest in front of any embedder and persists the table as
// JSON Lines, so repeated pipeline stages embed each distinct text once.
class CachingEmbedder : public TextEmbedder {
 public:
  explicit CachingEmbedder(TextEmbedder& inner) : inner_(inner) {}
  EmbeddingVector embed(const std::string& text) override;
  int dim() const override { return inner_.dim(); }

  void save(const std::filesystem::path& path) const;
  // Merges entries from path; throws on a vector of the wrong dimension.
  size_t load(const std::filesystem::path& path);
  size_t size() const { return by_digest_.size(); }

 private:
  TextEmbedder& inner_;
  std::map<std::string, EmbeddingVector> by_digest_;
};

std::unique_ptr<TextEmbedder> make_embedder(const EmbedderConfig& config);

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace daud

#pragma once

#include "daud/params.hpp"
#include "daud/tape.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace daud {

struct ModelConfig {
  size_t d_in = 768;
  size_t d_z = 128;
  size_t heads = 4;
  size_t layers = 2;
  double dropout = 0.1;
  size_t k_cap = 32;   // max engagements kept per user
  size_t m_cap = 32;   // max engaging users kept per news
  double lambda_dom = 0.1;
  size_t n_domains = 0;

  void validate() const;  // throws Config errors
  json to_json() const;
  static ModelConfig from_json(const json& j);
};

enum class ModelVariant { Full, NoLdae, NoDsra };

std::string variant_to_string(ModelVariant v);
ModelVariant variant_from_string(const std::string& s);

// One detection instance: a news item with the users who engaged with it.
// Embeddings are all d_in rows. Engagement and comment lists are aligned and
// timestamp-ascending; users are ordered by their engagement on this news.
struct UserInputs {
  std::string user_id;
  Tensor h_p;                // 1 x d_in profile embedding
  std::vector<Tensor> h_e;   // engagement embeddings, oldest first
  std::vector<Tensor> h_c;   // comment embeddings, aligned with h_e
};

struct NewsBundle {
  std::string news_id;
  Tensor h_x;  // 1 x d_in raw content embedding
  Tensor h_d;  // 1 x d_in description embedding
  std::vector<UserInputs> users;
  int domain_index = 0;
  double label = 0.0;  // 1.0 = fake
};

struct ForwardResult {
  Var z_n;   // 1 x 2*d_z fused news vector
  Var z_u;   // 1 x d_z aggregated user vector
  Var prob;  // 1 x 1 fake probability
  std::vector<Var> domain_logits;  // 1 x n_domains each, through the reversal
};

// Hierarchical model: per-level disentanglers with domain-adversarial heads,
// a shared relation module, relation-injected fusions at the news, user, and
// engagement levels, and two transformer encoder stacks. The no_dsra variant
// swaps all of that for per-level linear projections with mean pooling; the
// no_ldae variant only changes what the bundles contain, not this graph.
class DsraModel {
 public:
  DsraModel(ModelConfig config, ModelVariant variant, uint64_t seed);

  // grl_factor is the gradient multiplier between each z and its domain head
  // (-1 reverses for adversarial training; +1 makes gradients checkable).
  ForwardResult forward(Tape& tape, const NewsBundle& bundle, bool training,
                        double grl_factor = -1.0, bool positional = true);

  // Building blocks, exposed for the op-level fixtures.
  std::pair<Var, Var> disentangle(Tape& tape, Var h, const std::string& level,
                                  double grl_factor = -1.0);
  Var relation_vector(Tape& tape, Var a, Var b);  // rows are aligned pairs
  Var mutual_relation_fusion(Tape& tape, Var z_x, Var z_d);
  Var profile_aware_fusion(Tape& tape, Var z_e_seq, Var z_p_seq, bool training);
  Var comment_aware_fusion(Tape& tape, Var z_e_seq, Var z_c_seq, bool training);
  Var encode_sequence(Tape& tape, Var seq, const std::string& stack, bool training,
                      bool positional = true);

  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const ModelConfig& config() const { return config_; }
  ModelVariant variant() const { return variant_; }
  uint64_t seed() const { return seed_; }

  json checkpoint_json() const;
  void load_checkpoint(const json& j);

 private:
  Var affine(Tape& tape, Var x, const std::string& w, const std::string& b);
  Var multi_head_attention(Tape& tape, Var queries, Var keys_values, const std::string& prefix,
                           bool training);
  Var cross_fusion(Tape& tape, Var queries_seq, Var reference_seq, const std::string& prefix,
                   bool training);
  ForwardResult forward_full(Tape& tape, const NewsBundle& bundle, bool training,
                             double grl_factor, bool positional);
  ForwardResult forward_no_dsra(Tape& tape, const NewsBundle& bundle);
  void register_params();
  void check_bundle(const NewsBundle& bundle) const;

  ModelConfig config_;
  ModelVariant variant_;
  uint64_t seed_;
  ParamStore store_;
};

// Sinusoidal encodings indexed by recency: the sequence's last row (the most
// recent element) gets position 0.
Tensor recency_positional_encoding(size_t length, size_t dim);

}  // namespace daud

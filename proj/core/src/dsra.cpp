#include "daud/dsra.hpp"

#include <cmath>

namespace daud {

namespace {

const char* kLevelTags[] = {"news_text", "news_summary", "user_profile", "engagement", "comment"};

}  // namespace

void ModelConfig::validate() const {
  if (d_in == 0 || d_z == 0) throw_config("InvalidModelConfig", "dims must be positive");
  if (heads == 0 || d_z % heads != 0)
    throw_config("InvalidModelConfig", "d_z " + std::to_string(d_z) + " not divisible by heads " +
                                           std::to_string(heads));
  if (k_cap < 1 || m_cap < 1) throw_config("InvalidModelConfig", "caps must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0)
    throw_config("InvalidModelConfig", "dropout must be in [0, 1)");
  if (lambda_dom < 0.0) throw_config("InvalidModelConfig", "lambda_dom must be >= 0");
  if (n_domains < 1) throw_config("InvalidModelConfig", "n_domains must be >= 1");
}

json ModelConfig::to_json() const {
  return json{{"d_in", d_in},     {"d_z", d_z},
              {"heads", heads},   {"layers", layers},
              {"dropout", dropout}, {"k_cap", k_cap},
              {"m_cap", m_cap},   {"lambda_dom", lambda_dom},
              {"n_domains", n_domains}};
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig c;
  c.d_in = j.value("d_in", c.d_in);
  c.d_z = j.value("d_z", c.d_z);
  c.heads = j.value("heads", c.heads);
  c.layers = j.value("layers", c.layers);
  c.dropout = j.value("dropout", c.dropout);
  c.k_cap = j.value("k_cap", c.k_cap);
  c.m_cap = j.value("m_cap", c.m_cap);
  c.lambda_dom = j.value("lambda_dom", c.lambda_dom);
  c.n_domains = j.value("n_domains", c.n_domains);
  return c;
}

std::string variant_to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::Full: return "full";
    case ModelVariant::NoLdae: return "no_ldae";
    case ModelVariant::NoDsra: return "no_dsra";
  }
  throw_invariant("UnknownVariant", "unmapped variant value");
}

ModelVariant variant_from_string(const std::string& s) {
  if (s == "full") return ModelVariant::Full;
  if (s == "no_ldae") return ModelVariant::NoLdae;
  if (s == "no_dsra") return ModelVariant::NoDsra;
  throw_config("UnknownVariant", "variant '" + s + "'");
}

Tensor recency_positional_encoding(size_t length, size_t dim) {
  Tensor pe(length, dim);
  for (size_t i = 0; i < length; ++i) {
    size_t pos = length - 1 - i;  // last row is the most recent element
    for (size_t j = 0; j < dim; ++j) {
      double exponent = static_cast<double>(2 * (j / 2)) / static_cast<double>(dim);
      double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      pe.at(i, j) = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

DsraModel::DsraModel(ModelConfig config, ModelVariant variant, uint64_t seed)
    : config_(config), variant_(variant), seed_(seed), store_(seed) {
  config_.validate();
  register_params();
}

void DsraModel::register_params() {
  size_t d_in = config_.d_in;
  size_t d_z = config_.d_z;

  if (variant_ == ModelVariant::NoDsra) {
    for (const char* tag : kLevelTags) {
      std::string p = std::string("proj.") + tag;
      store_.add(p + ".w", d_in, d_z, ParamInit::FanInUniform);
      store_.add(p + ".b", 1, d_z, ParamInit::Zero);
    }
    store_.add("proj.no_eng", 1, d_z, ParamInit::FanInUniform);
    store_.add("head.w", 3 * d_z, 1, ParamInit::FanInUniform);
    store_.add("head.b", 1, 1, ParamInit::Zero);
    return;
  }

  for (const char* tag : kLevelTags) {
    std::string p = std::string("dis.") + tag;
    store_.add(p + ".w1", d_in, d_z, ParamInit::FanInUniform);
    store_.add(p + ".b1", 1, d_z, ParamInit::Zero);
    store_.add(p + ".w2", d_z, d_z, ParamInit::FanInUniform);
    store_.add(p + ".b2", 1, d_z, ParamInit::Zero);
    store_.add(p + ".dom_w", d_z, config_.n_domains, ParamInit::FanInUniform);
    store_.add(p + ".dom_b", 1, config_.n_domains, ParamInit::Zero);
  }

  store_.add("rel.w1", 4 * d_z, d_z, ParamInit::FanInUniform);
  store_.add("rel.b1", 1, d_z, ParamInit::Zero);
  store_.add("rel.w2", d_z, d_z, ParamInit::FanInUniform);
  store_.add("rel.b2", 1, d_z, ParamInit::Zero);

  store_.add("mrf.wx", d_z, d_z, ParamInit::FanInUniform);
  store_.add("mrf.wd", d_z, d_z, ParamInit::FanInUniform);
  store_.add("mrf.gate_x_w", 2 * d_z, d_z, ParamInit::FanInUniform);
  store_.add("mrf.gate_x_b", 1, d_z, ParamInit::Zero);
  store_.add("mrf.gate_d_w", 2 * d_z, d_z, ParamInit::FanInUniform);
  store_.add("mrf.gate_d_b", 1, d_z, ParamInit::Zero);
  store_.add("mrf.mix_x", d_z, d_z, ParamInit::FanInUniform);
  store_.add("mrf.mix_d", d_z, d_z, ParamInit::FanInUniform);

  for (const char* prefix : {"pf", "cf"}) {
    std::string p = prefix;
    store_.add(p + ".w_inj", d_z, d_z, ParamInit::FanInUniform);
    store_.add(p + ".wq", d_z, d_z, ParamInit::FanInUniform);
    store_.add(p + ".bq", 1, d_z, ParamInit::Zero);
    store_.add(p + ".wk", d_z, d_z, ParamInit::FanInUniform);
    store_.add(p + ".bk", 1, d_z, ParamInit::Zero);
    store_.add(p + ".wv", d_z, d_z, ParamInit::FanInUniform);
    store_.add(p + ".bv", 1, d_z, ParamInit::Zero);
    store_.add(p + ".wo", d_z, d_z, ParamInit::FanInUniform);
    store_.add(p + ".bo", 1, d_z, ParamInit::Zero);
  }

  for (const char* stack : {"eng", "usr"}) {
    std::string p = std::string("enc.") + stack;
    store_.add(p + ".agg", 1, d_z, ParamInit::FanInUniform);
    for (size_t layer = 0; layer < config_.layers; ++layer) {
      std::string lp = p + ".layer" + std::to_string(layer);
      store_.add(lp + ".wq", d_z, d_z, ParamInit::FanInUniform);
      store_.add(lp + ".bq", 1, d_z, ParamInit::Zero);
      store_.add(lp + ".wk", d_z, d_z, ParamInit::FanInUniform);
      store_.add(lp + ".bk", 1, d_z, ParamInit::Zero);
      store_.add(lp + ".wv", d_z, d_z, ParamInit::FanInUniform);
      store_.add(lp + ".bv", 1, d_z, ParamInit::Zero);
      store_.add(lp + ".wo", d_z, d_z, ParamInit::FanInUniform);
      store_.add(lp + ".bo", 1, d_z, ParamInit::Zero);
      store_.add(lp + ".ff_w1", d_z, 2 * d_z, ParamInit::FanInUniform);
      store_.add(lp + ".ff_b1", 1, 2 * d_z, ParamInit::Zero);
      store_.add(lp + ".ff_w2", 2 * d_z, d_z, ParamInit::FanInUniform);
      store_.add(lp + ".ff_b2", 1, d_z, ParamInit::Zero);
      store_.add(lp + ".ln1_g", 1, d_z, ParamInit::One);
      store_.add(lp + ".ln1_b", 1, d_z, ParamInit::Zero);
      store_.add(lp + ".ln2_g", 1, d_z, ParamInit::One);
      store_.add(lp + ".ln2_b", 1, d_z, ParamInit::Zero);
    }
    store_.add(p + ".final_g", 1, d_z, ParamInit::One);
    store_.add(p + ".final_b", 1, d_z, ParamInit::Zero);
  }
  store_.add("enc.usr.no_eng", 1, d_z, ParamInit::FanInUniform);

  store_.add("head.w", 3 * d_z, 1, ParamInit::FanInUniform);
  store_.add("head.b", 1, 1, ParamInit::Zero);
}

Var DsraModel::affine(Tape& tape, Var x, const std::string& w, const std::string& b) {
  return tape.add_rowvec(tape.matmul(x, tape.param(store_.at(w))), tape.param(store_.at(b)));
}

std::pair<Var, Var> DsraModel::disentangle(Tape& tape, Var h, const std::string& level,
                                           double grl_factor) {
  bool known = false;
  for (const char* tag : kLevelTags) known = known || level == tag;
  if (!known) throw_invariant("UnknownLevel", "disentangler level '" + level + "'");
  if (tape.value(h).cols() != config_.d_in)
    throw_invariant("DimensionMismatch", "disentangle input has " +
                                             std::to_string(tape.value(h).cols()) +
                                             " columns, expected " + std::to_string(config_.d_in));
  std::string p = "dis." + level;
  Var stage1 = tape.tanh(affine(tape, h, p + ".w1", p + ".b1"));
  Var z = tape.tanh(affine(tape, stage1, p + ".w2", p + ".b2"));
  Var reversed = tape.grad_scale(z, grl_factor);
  Var logits = affine(tape, reversed, p + ".dom_w", p + ".dom_b");
  return {z, logits};
}

Var DsraModel::relation_vector(Tape& tape, Var a, Var b) {
  const Tensor& va = tape.value(a);
  const Tensor& vb = tape.value(b);
  if (va.cols() != config_.d_z || vb.cols() != config_.d_z || va.rows() != vb.rows())
    throw_invariant("DimensionMismatch",
                    "relation inputs " + va.shape_string() + " vs " + vb.shape_string());
  Var features = tape.concat_cols({a, b, tape.mul(a, b), tape.abs(tape.sub(a, b))});
  Var hidden = tape.tanh(affine(tape, features, "rel.w1", "rel.b1"));
  return affine(tape, hidden, "rel.w2", "rel.b2");
}

Var DsraModel::mutual_relation_fusion(Tape& tape, Var z_x, Var z_d) {
  Var r = relation_vector(tape, z_x, z_d);
  Var q_x = tape.add(z_x, tape.matmul(r, tape.param(store_.at("mrf.wx"))));
  Var q_d = tape.add(z_d, tape.matmul(r, tape.param(store_.at("mrf.wd"))));
  Var gate_x = tape.sigmoid(affine(tape, tape.concat_cols({q_x, q_d}), "mrf.gate_x_w",
                                   "mrf.gate_x_b"));
  Var gate_d = tape.sigmoid(affine(tape, tape.concat_cols({q_d, q_x}), "mrf.gate_d_w",
                                   "mrf.gate_d_b"));
  Var hat_x = tape.add(q_x, tape.mul(gate_x, tape.matmul(q_d, tape.param(store_.at("mrf.mix_x")))));
  Var hat_d = tape.add(q_d, tape.mul(gate_d, tape.matmul(q_x, tape.param(store_.at("mrf.mix_d")))));
  return tape.concat_cols({hat_x, hat_d});
}

Var DsraModel::multi_head_attention(Tape& tape, Var queries, Var keys_values,
                                    const std::string& prefix, bool training) {
  size_t d_z = config_.d_z;
  size_t d_h = d_z / config_.heads;
  Var q = affine(tape, queries, prefix + ".wq", prefix + ".bq");
  Var k = affine(tape, keys_values, prefix + ".wk", prefix + ".bk");
  Var v = affine(tape, keys_values, prefix + ".wv", prefix + ".bv");
  std::vector<Var> heads;
  for (size_t h = 0; h < config_.heads; ++h) {
    Var qh = tape.slice_cols(q, h * d_h, d_h);
    Var kh = tape.slice_cols(k, h * d_h, d_h);
    Var vh = tape.slice_cols(v, h * d_h, d_h);
    Var scores = tape.scale(tape.matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(d_h)));
    heads.push_back(tape.matmul(tape.softmax_rows(scores), vh));
  }
  Var merged = config_.heads == 1 ? heads[0] : tape.concat_cols(heads);
  Var out = affine(tape, merged, prefix + ".wo", prefix + ".bo");
  return tape.dropout(out, config_.dropout, training);
}

Var DsraModel::cross_fusion(Tape& tape, Var queries_seq, Var reference_seq,
                            const std::string& prefix, bool training) {
  const Tensor& vq = tape.value(queries_seq);
  const Tensor& vr = tape.value(reference_seq);
  if (vq.rows() == 0 || vr.rows() == 0)
    throw_invariant("EmptySequence", prefix + " fusion over an empty sequence");
  if (vq.rows() != vr.rows())
    throw_invariant("LengthMismatch", prefix + " fusion: " + std::to_string(vq.rows()) + " vs " +
                                          std::to_string(vr.rows()) + " rows");
  Var relation = relation_vector(tape, queries_seq, reference_seq);
  Var queries =
      tape.add(queries_seq, tape.matmul(relation, tape.param(store_.at(prefix + ".w_inj"))));
  Var attended = multi_head_attention(tape, queries, reference_seq, prefix, training);
  return tape.add(queries, attended);
}

Var DsraModel::profile_aware_fusion(Tape& tape, Var z_e_seq, Var z_p_seq, bool training) {
  return cross_fusion(tape, z_e_seq, z_p_seq, "pf", training);
}

Var DsraModel::comment_aware_fusion(Tape& tape, Var z_e_seq, Var z_c_seq, bool training) {
  return cross_fusion(tape, z_e_seq, z_c_seq, "cf", training);
}

Var DsraModel::encode_sequence(Tape& tape, Var seq, const std::string& stack, bool training,
                               bool positional) {
  if (stack != "eng" && stack != "usr")
    throw_invariant("UnknownStack", "encoder stack '" + stack + "'");
  size_t n = tape.value(seq).rows();
  if (n == 0) throw_invariant("EmptySequence", "encoder input has zero rows");
  size_t cap = stack == "eng" ? config_.k_cap : config_.m_cap;
  if (n > cap) {
    seq = tape.slice_rows(seq, n - cap, cap);  // keep the most recent elements
    n = cap;
  }
  if (positional)
    seq = tape.add(seq, tape.constant(recency_positional_encoding(n, config_.d_z)));

  std::string p = "enc." + stack;
  Var x = tape.concat_rows({tape.param(store_.at(p + ".agg")), seq});
  for (size_t layer = 0; layer < config_.layers; ++layer) {
    std::string lp = p + ".layer" + std::to_string(layer);
    Var attn = multi_head_attention(tape, x, x, lp, training);
    x = tape.layer_norm(tape.add(x, attn), tape.param(store_.at(lp + ".ln1_g")),
                        tape.param(store_.at(lp + ".ln1_b")));
    Var hidden = tape.tanh(affine(tape, x, lp + ".ff_w1", lp + ".ff_b1"));
    Var ff = tape.dropout(affine(tape, hidden, lp + ".ff_w2", lp + ".ff_b2"), config_.dropout,
                          training);
    x = tape.layer_norm(tape.add(x, ff), tape.param(store_.at(lp + ".ln2_g")),
                        tape.param(store_.at(lp + ".ln2_b")));
  }
  x = tape.layer_norm(x, tape.param(store_.at(p + ".final_g")), tape.param(store_.at(p + ".final_b")));
  return tape.row(x, 0);
}

void DsraModel::check_bundle(const NewsBundle& bundle) const {
  auto check_vec = [&](const Tensor& t, const std::string& what) {
    if (t.rows() != 1 || t.cols() != config_.d_in)
      throw_invariant("DimensionMismatch", what + " is " + t.shape_string() + ", expected 1x" +
                                               std::to_string(config_.d_in));
  };
  check_vec(bundle.h_x, "bundle " + bundle.news_id + " h_x");
  check_vec(bundle.h_d, "bundle " + bundle.news_id + " h_d");
  if (bundle.domain_index < 0 || static_cast<size_t>(bundle.domain_index) >= config_.n_domains)
    throw_invariant("DomainOutOfRange", "bundle " + bundle.news_id + " domain index " +
                                            std::to_string(bundle.domain_index));
  for (const auto& user : bundle.users) {
    check_vec(user.h_p, "user " + user.user_id + " h_p");
    if (user.h_e.size() != user.h_c.size())
      throw_invariant("LengthMismatch", "user " + user.user_id + " has " +
                                            std::to_string(user.h_e.size()) + " engagements, " +
                                            std::to_string(user.h_c.size()) + " comments");
    if (user.h_e.empty())
      throw_invariant("EmptySequence", "user " + user.user_id + " has no engagements in bundle");
    for (const auto& t : user.h_e) check_vec(t, "user " + user.user_id + " h_e");
    for (const auto& t : user.h_c) check_vec(t, "user " + user.user_id + " h_c");
  }
}

ForwardResult DsraModel::forward(Tape& tape, const NewsBundle& bundle, bool training,
                                 double grl_factor, bool positional) {
  check_bundle(bundle);
  if (variant_ == ModelVariant::NoDsra) return forward_no_dsra(tape, bundle);
  return forward_full(tape, bundle, training, grl_factor, positional);
}

ForwardResult DsraModel::forward_full(Tape& tape, const NewsBundle& bundle, bool training,
                                      double grl_factor, bool positional) {
  ForwardResult result;
  auto disentangled = [&](const Tensor& h, const std::string& level) {
    auto [z, logits] = disentangle(tape, tape.constant(h), level, grl_factor);
    result.domain_logits.push_back(logits);
    return z;
  };

  Var z_x = disentangled(bundle.h_x, "news_text");
  Var z_d = disentangled(bundle.h_d, "news_summary");

  // Caps: keep the most recent users and, per user, the most recent
  // engagements (sequences arrive oldest -> newest).
  size_t first_user = bundle.users.size() > config_.m_cap ? bundle.users.size() - config_.m_cap : 0;

  std::vector<Var> user_vectors;
  std::vector<Var> profile_vectors;
  for (size_t u = first_user; u < bundle.users.size(); ++u) {
    const UserInputs& user = bundle.users[u];
    profile_vectors.push_back(disentangled(user.h_p, "user_profile"));
    size_t first_eng = user.h_e.size() > config_.k_cap ? user.h_e.size() - config_.k_cap : 0;
    std::vector<Var> z_e_rows, z_c_rows;
    for (size_t k = first_eng; k < user.h_e.size(); ++k) {
      z_e_rows.push_back(disentangled(user.h_e[k], "engagement"));
      z_c_rows.push_back(disentangled(user.h_c[k], "comment"));
    }
    Var z_e_seq = tape.concat_rows(z_e_rows);
    Var z_c_seq = tape.concat_rows(z_c_rows);
    Var refined = comment_aware_fusion(tape, z_e_seq, z_c_seq, training);
    user_vectors.push_back(encode_sequence(tape, refined, "eng", training, positional));
  }

  Var z_u;
  if (user_vectors.empty()) {
    z_u = tape.param(store_.at("enc.usr.no_eng"));
  } else {
    Var z_e_stack = tape.concat_rows(user_vectors);
    Var z_p_stack = tape.concat_rows(profile_vectors);
    Var refined_users = profile_aware_fusion(tape, z_e_stack, z_p_stack, training);
    z_u = encode_sequence(tape, refined_users, "usr", training, positional);
  }

  Var z_n = mutual_relation_fusion(tape, z_x, z_d);
  result.z_n = z_n;
  result.z_u = z_u;
  result.prob = tape.sigmoid(affine(tape, tape.concat_cols({z_n, z_u}), "head.w", "head.b"));
  return result;
}

ForwardResult DsraModel::forward_no_dsra(Tape& tape, const NewsBundle& bundle) {
  ForwardResult result;
  auto project = [&](const Tensor& h, const std::string& tag) {
    std::string p = "proj." + tag;
    return affine(tape, tape.constant(h), p + ".w", p + ".b");
  };

  Var z_x = project(bundle.h_x, "news_text");
  Var z_d = project(bundle.h_d, "news_summary");

  size_t first_user = bundle.users.size() > config_.m_cap ? bundle.users.size() - config_.m_cap : 0;
  std::vector<Var> user_vectors;
  for (size_t u = first_user; u < bundle.users.size(); ++u) {
    const UserInputs& user = bundle.users[u];
    Var z_p = project(user.h_p, "user_profile");
    size_t first_eng = user.h_e.size() > config_.k_cap ? user.h_e.size() - config_.k_cap : 0;
    std::vector<Var> z_e_rows, z_c_rows;
    for (size_t k = first_eng; k < user.h_e.size(); ++k) {
      z_e_rows.push_back(project(user.h_e[k], "engagement"));
      z_c_rows.push_back(project(user.h_c[k], "comment"));
    }
    Var mean_e = tape.mean_rows(tape.concat_rows(z_e_rows));
    Var mean_c = tape.mean_rows(tape.concat_rows(z_c_rows));
    user_vectors.push_back(tape.add(tape.add(mean_e, mean_c), z_p));
  }

  Var z_u = user_vectors.empty() ? tape.param(store_.at("proj.no_eng"))
                                 : tape.mean_rows(tape.concat_rows(user_vectors));
  Var z_n = tape.concat_cols({z_x, z_d});
  result.z_n = z_n;
  result.z_u = z_u;
  result.prob = tape.sigmoid(affine(tape, tape.concat_cols({z_n, z_u}), "head.w", "head.b"));
  return result;
}

json DsraModel::checkpoint_json() const {
  return json{{"config", config_.to_json()},
              {"variant", variant_to_string(variant_)},
              {"seed", seed_},
              {"state", store_.to_json()}};
}

void DsraModel::load_checkpoint(const json& j) {
  if (j.at("variant").get<std::string>() != variant_to_string(variant_))
    throw_invariant("CheckpointMismatch", "checkpoint variant differs");
  ModelConfig other = ModelConfig::from_json(j.at("config"));
  if (other.to_json() != config_.to_json())
    throw_invariant("CheckpointMismatch", "checkpoint model config differs");
  store_.load_json(j.at("state"));
}

}  // namespace daud

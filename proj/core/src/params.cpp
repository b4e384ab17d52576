#include "daud/params.hpp"

#include <cmath>

namespace daud {

Param& ParamStore::add(const std::string& name, size_t rows, size_t cols, ParamInit init) {
  if (index_.count(name)) throw_invariant("DuplicateParam", "parameter '" + name + "'");
  if (rows == 0 || cols == 0)
    throw_invariant("EmptyParam", "parameter '" + name + "' has a zero dimension");
  Param p;
  p.name = name;
  p.value = Tensor(rows, cols);
  p.grad = Tensor(rows, cols);
  p.adam_m = Tensor(rows, cols);
  p.adam_v = Tensor(rows, cols);
  switch (init) {
    case ParamInit::FanInUniform: {
      double bound = 1.0 / std::sqrt(static_cast<double>(rows));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (auto& v : p.value.raw()) v = dist(rng_);
      break;
    }
    case ParamInit::Zero:
      break;
    case ParamInit::One:
      p.value.fill(1.0);
      break;
  }
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return params_.back();
}

Param& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw_invariant("UnknownParam", "parameter '" + name + "'");
  return params_[it->second];
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw_invariant("UnknownParam", "parameter '" + name + "'");
  return params_[it->second];
}

size_t ParamStore::total_values() const {
  size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p.grad.fill(0.0);
}

void ParamStore::adamw_step(const AdamWConfig& config) {
  step_ += 1;
  double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step_));
  double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step_));
  for (auto& p : params_) {
    auto& value = p.value.raw();
    auto& grad = p.grad.raw();
    auto& m = p.adam_m.raw();
    auto& v = p.adam_v.raw();
    for (size_t i = 0; i < value.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
      double m_hat = m[i] / bc1;
      double v_hat = v[i] / bc2;
      value[i] -= config.lr * (m_hat / (std::sqrt(v_hat) + config.eps) +
                               config.weight_decay * value[i]);
    }
  }
}

json ParamStore::to_json() const {
  json entries = json::array();
  for (const auto& p : params_) {
    entries.push_back({{"name", p.name},
                       {"rows", p.value.rows()},
                       {"cols", p.value.cols()},
                       {"data", p.value.raw()},
                       {"adam_m", p.adam_m.raw()},
                       {"adam_v", p.adam_v.raw()}});
  }
  return json{{"step", step_}, {"params", entries}};
}

void ParamStore::load_json(const json& j) {
  const auto& entries = j.at("params");
  if (entries.size() != params_.size())
    throw_invariant("CheckpointMismatch", "checkpoint has " + std::to_string(entries.size()) +
                                              " params, store has " +
                                              std::to_string(params_.size()));
  for (size_t i = 0; i < params_.size(); ++i) {
    const auto& e = entries[i];
    Param& p = params_[i];
    if (e.at("name").get<std::string>() != p.name)
      throw_invariant("CheckpointMismatch", "param " + std::to_string(i) + " is '" +
                                                e.at("name").get<std::string>() + "', expected '" +
                                                p.name + "'");
    if (e.at("rows").get<size_t>() != p.value.rows() ||
        e.at("cols").get<size_t>() != p.value.cols())
      throw_invariant("CheckpointMismatch", "param '" + p.name + "' shape differs");
    p.value.raw() = e.at("data").get<std::vector<double>>();
    if (e.contains("adam_m")) p.adam_m.raw() = e.at("adam_m").get<std::vector<double>>();
    if (e.contains("adam_v")) p.adam_v.raw() = e.at("adam_v").get<std::vector<double>>();
  }
  step_ = j.at("step").get<int64_t>();
}

}  // namespace daud

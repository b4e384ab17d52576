#pragma once

#include "daud/jsonl.hpp"
#include "daud/tensor.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace daud {

enum class ParamInit { FanInUniform, Zero, One };

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor adam_m;
  Tensor adam_v;
};

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Named trainable tensors in registration order. Weight matrices W for
// y = x * W are rows x cols = fan_in x fan_out, initialized uniform in
// +-1/sqrt(fan_in); biases zero; normalization gains one. All randomness
// comes from the store's own seeded generator, so a fixed registration
// order reproduces values exactly.
class ParamStore {
 public:
  explicit ParamStore(uint64_t seed) : rng_(seed) {}

  Param& add(const std::string& name, size_t rows, size_t cols, ParamInit init);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  std::vector<Param>& all() { return params_; }
  const std::vector<Param>& all() const { return params_; }
  size_t total_values() const;

  void zero_grads();
  // Decoupled weight decay applied to every parameter uniformly.
  void adamw_step(const AdamWConfig& config);
  int64_t steps() const { return step_; }

  json to_json() const;
  // Restores values (and the step counter) into an identically registered
  // store; mismatched names or shapes are invariant violations.
  void load_json(const json& j);

 private:
  std::vector<Param> params_;
  std::map<std::string, size_t> index_;
  std::mt19937_64 rng_;
  int64_t step_ = 0;
};

}  // namespace daud

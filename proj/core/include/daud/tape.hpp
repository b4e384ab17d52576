#pragma once

#include "daud/params.hpp"
#include "daud/tensor.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace daud {

struct Var {
  size_t id = 0;
};

// Define-by-run reverse-mode tape. Build the forward graph with the op
// methods, then call backward(loss) once; leaf nodes created via param()
// accumulate into their Param's grad. Create a fresh tape per forward pass.
class Tape {
 public:
  explicit Tape(uint64_t dropout_seed = 0) : rng_(dropout_seed) {}

  Var constant(Tensor value);
  // The Param must outlive the tape (stores register everything up front).
  Var param(Param& p);

  Var matmul(Var a, Var b);     // (n x k) * (k x m)
  Var matmul_nt(Var a, Var b);  // (n x k) * (m x k)^T
  Var add(Var a, Var b);
  Var add_rowvec(Var x, Var v);  // broadcasts a 1 x d row over n x d
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var abs(Var x);
  Var scale(Var x, double c);
  Var tanh(Var x);
  Var sigmoid(Var x);
  Var softmax_rows(Var x);
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
  Var concat_cols(const std::vector<Var>& xs);
  Var concat_rows(const std::vector<Var>& xs);
  Var slice_cols(Var x, size_t begin, size_t len);
  Var slice_rows(Var x, size_t begin, size_t len);
  Var row(Var x, size_t i);
  Var mean_rows(Var x);  // n x d -> 1 x d

  // Mean binary cross-entropy over n x 1 probabilities; probabilities are
  // clamped away from 0 and 1 by 1e-12 before the logs.
  Var bce_mean(Var probs, const Tensor& targets);
  // Fused softmax + mean cross-entropy over integer class labels.
  Var softmax_ce_mean(Var logits, const std::vector<int>& labels);

  // Identity forward; multiplies the incoming gradient by factor (factor = -1
  // gives gradient reversal).
  Var grad_scale(Var x, double factor);
  // Inverted dropout from the tape's seeded generator; identity when not
  // training or rate is zero.
  Var dropout(Var x, double rate, bool training);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
  void backward(Var loss);
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&, size_t)> backward;
  };

  Var push(Tensor value, std::function<void(Tape&, size_t)> backward);
  Tensor& grad_mut(size_t id) { return nodes_[id].grad; }
  const Tensor& value_at(size_t id) const { return nodes_[id].value; }

  std::vector<Node> nodes_;
  std::mt19937_64 rng_;
};

}  // namespace daud

#include "daud/tape.hpp"

#include <cmath>

namespace daud {

Var Tape::push(Tensor value, std::function<void(Tape&, size_t)> backward) {
  Node node;
  node.grad = Tensor(value.rows(), value.cols());
  node.value = std::move(value);
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Tensor value) { return push(std::move(value), nullptr); }

Var Tape::param(Param& p) {
  Param* target = &p;
  return push(p.value, [target](Tape& t, size_t id) {
    const Tensor& g = t.grad_mut(id);
    auto& out = target->grad.raw();
    const auto& in = g.raw();
    for (size_t i = 0; i < out.size(); ++i) out[i] += in[i];
  });
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& va = value_at(a.id);
  const Tensor& vb = value_at(b.id);
  if (va.cols() != vb.rows())
    throw_invariant("ShapeMismatch",
                    "matmul: " + va.shape_string() + " * " + vb.shape_string());
  Tensor out(va.rows(), vb.cols());
  for (size_t i = 0; i < va.rows(); ++i)
    for (size_t k = 0; k < va.cols(); ++k) {
      double aik = va.at(i, k);
      if (aik == 0.0) continue;
      for (size_t j = 0; j < vb.cols(); ++j) out.at(i, j) += aik * vb.at(k, j);
    }
  return push(std::move(out), [a, b](Tape& t, size_t id) {
    const Tensor& g = t.grad_mut(id);
    const Tensor& va = t.value_at(a.id);
    const Tensor& vb = t.value_at(b.id);
    Tensor& ga = t.grad_mut(a.id);
    Tensor& gb = t.grad_mut(b.id);
    for (size_t i = 0; i < va.rows(); ++i)
      for (size_t j = 0; j < vb.cols(); ++j) {
        double gij = g.at(i, j);
        if (gij == 0.0) continue;
        for (size_t k = 0; k < va.cols(); ++k) {
          ga.at(i, k) += gij * vb.at(k, j);
          gb.at(k, j) += gij * va.at(i, k);
        }
      }
  });
}

Var Tape::matmul_nt(Var a, Var b) {
  const Tensor& va = value_at(a.id);
  const Tensor& vb = value_at(b.id);
  if (va.cols() != vb.cols())
    throw_invariant("ShapeMismatch",
                    "matmul_nt: " + va.shape_string() + " * " + vb.shape_string() + "^T");
  Tensor out(va.rows(), vb.rows());
  for (size_t i = 0; i < va.rows(); ++i)
    for (size_t j = 0; j < vb.rows(); ++j) {
      double acc = 0;
      for (size_t k = 0; k < va.cols(); ++k) acc += va.at(i, k) * vb.at(j, k);
      out.at(i, j) = acc;
    }
  return push(std::move(out), [a, b](Tape& t, size_t id) {
    const Tensor& g = t.grad_mut(id);
    const Tensor& va = t.value_at(a.id);
    const Tensor& vb = t.value_at(b.id);
    Tensor& ga = t.grad_mut(a.id);
    Tensor& gb = t.grad_mut(b.id);
    for (size_t i = 0; i < va.rows(); ++i)
      for (size_t j = 0; j < vb.rows(); ++j) {
        double gij = g.at(i, j);
        if (gij == 0.0) continue;
        for (size_t k = 0; k < va.cols(); ++k) {
          ga.at(i, k) += gij * vb.at(j, k);
          gb.at(j, k) += gij * va.at(i, k);
        }
      }
  });
}

Var Tape::add(Var a, Var b) {
  const Tensor& va = value_at(a.id);
  const Tensor& vb = value_at(b.id);
  require_same_shape(va, vb, "add");
  Tensor out = va;
  for (size_t i = 0; i < out.size(); ++i) out.raw()[i] += vb.raw()[i];
  return push(std::move(out), [a, b](Tape& t, size_t id) {
    const auto& g = t.grad_mut(id).raw();
    auto& ga = t.grad_mut(a.id).raw();
    auto& gb = t.grad_mut(b.id).raw();
    for (size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  });
}

Var Tape::add_rowvec(Var x, Var v) {
  const Tensor& vx = value_at(x.id);
  const Tensor& vv = value_at(v.id);
  if (vv.rows() != 1 || vv.cols() != vx.cols())
    throw_invariant("ShapeMismatch",
                    "add_rowvec: " + vx.shape_string() + " + " + vv.shape_string());
  Tensor out = vx;
  for (size_t i = 0; i < out.rows(); ++i)
    for (size_t j = 0; j < out.cols(); ++j) out.at(i, j) += vv.at(0, j);
  return push(std::move(out), [x, v](Tape& t, size_t id) {
    const Tensor& g = t.grad_mut(id);
    Tensor& gx = t.grad_mut(x.id);
    Tensor& gv = t.grad_mut(v.id);
    for (size_t i = 0; i < g.rows(); ++i)
      for (size_t j = 0; j < g.cols(); ++j) {
        gx.at(i, j) += g.at(i, j);
        gv.at(0, j) += g.at(i, j);
      }
  });
}

Var Tape::sub(Var a, Var b) {
  const Tensor& va = value_at(a.id);
  const Tensor& vb = value_at(b.id);
  require_same_shape(va, vb, "sub");
  Tensor out = va;
  for (size_t i = 0; i < out.size(); ++i) out.raw()[i] -= vb.raw()[i];
  return push(std::move(out), [a, b](Tape& t, size_t id) {
    const auto& g = t.grad_mut(id).raw();
    auto& ga = t.grad_mut(a.id).raw();
    auto& gb = t.grad_mut(b.id).raw();
    for (size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] -= g[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  const Tensor& va = value_at(a.id);
  const Tensor& vb = value_at(b.id);
  require_same_shape(va, vb, "mul");
  Tensor out = va;
  for (size_t i = 0; i < out.size(); ++i) out.raw()[i] *= vb.raw()[i];
  return push(std::move(out), [a, b](Tape& t, size_t id) {
    const auto& g = t.grad_mut(id).raw();
    const auto& va = t.value_at(a.id).raw();
    const auto& vb = t.value_at(b.id).raw();
    auto& ga = t.grad_mut(a.id).raw();
    auto& gb = t.grad_mut(b.id).raw();
    for (size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * vb[i];
      gb[i] += g[i] * va[i];
    }
  });
}

Var Tape::abs(Var x) {
  Tensor out = value_at(x.id);
  for (auto& v : out.raw()) v = std::fabs(v);
  return push(std::move(out), [x](Tape& t, size_t id) {
    const auto& g = t.grad_mut(id).raw();
    const auto& vx = t.value_at(x.id).raw();
    auto& gx = t.grad_mut(x.id).raw();
    for (size_t i = 0; i < g.size(); ++i) {
      double sign = vx[i] > 0 ? 1.0 : (vx[i] < 0 ? -1.0 : 0.0);
      gx[i] += g[i] * sign;
    }
  });
}

Var Tape::scale(Var x, double c) {
  Tensor out = value_at(x.id);
  for (auto& v : out.raw()) v *= c;
  return push(std::move(out), [x, c](Tape& t, size_t id) {
    const auto& g = t.grad_mut(id).raw();
    auto& gx = t.grad_mut(x.id).raw();
    for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * c;
  });
}

Var Tape::tanh(Var x) {
  Tensor out = value_at(x.id);
  for (auto& v : out.raw()) v = std::tanh(v);
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].backward = [x, y](Tape& t, size_t id) {
    const auto& g = t.grad_mut(id).raw();
    const auto& vy = t.value_at(y.id).raw();
    auto& gx = t.grad_mut(x.id).raw();
    for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - vy[i] * vy[i]);
  };
  return y;
}

Var Tape::sigmoid(Var x) {
  Tensor out = value_at(x.id);
  for (auto& v : out.raw()) v = 1.0 / (1.0 + std::exp(-v));
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].backward = [x, y](Tape& t, size_t id) {
    const auto& g = t.grad_mut(id).raw();
    const auto& vy = t.value_at(y.id).raw();
    auto& gx = t.grad_mut(x.id).raw();
    for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * vy[i] * (1.0 - vy[i]);
  };
  return y;
}

Var Tape::softmax_rows(Var x) {
  Tensor out = value_at(x.id);
  for (size_t i = 0; i < out.rows(); ++i) {
    double mx = out.at(i, 0);
    for (size_t j = 1; j < out.cols(); ++j) mx = std::max(mx, out.at(i, j));
    double sum = 0;
    for (size_t j = 0; j < out.cols(); ++j) {
      out.at(i, j) = std::exp(out.at(i, j) - mx);
      sum += out.at(i, j);
    }
    for (size_t j = 0; j < out.cols(); ++j) out.at(i, j) /= sum;
  }
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].backward = [x, y](Tape& t, size_t id) {
    const Tensor& g = t.grad_mut(id);
    const Tensor& vy = t.value_at(y.id);
    Tensor& gx = t.grad_mut(x.id);
    for (size_t i = 0; i < g.rows(); ++i) {
      double dot = 0;
      for (size_t j = 0; j < g.cols(); ++j) dot += g.at(i, j) * vy.at(i, j);
      for (size_t j = 0; j < g.cols(); ++j)
        gx.at(i, j) += vy.at(i, j) * (g.at(i, j) - dot);
    }
  };
  return y;
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& vx = value_at(x.id);
  const Tensor& vg = value_at(gain.id);
  const Tensor& vb = value_at(bias.id);
  if (vg.rows() != 1 || vg.cols() != vx.cols() || vb.rows() != 1 || vb.cols() != vx.cols())
    throw_invariant("ShapeMismatch", "layer_norm: input " + vx.shape_string() + ", gain " +
                                         vg.shape_string() + ", bias " + vb.shape_string());
  Tensor out(vx.rows(), vx.cols());
  for (size_t i = 0; i < vx.rows(); ++i) {
    double mean = 0;
    for (size_t j = 0; j < vx.cols(); ++j) mean += vx.at(i, j);
    mean /= static_cast<double>(vx.cols());
    double var = 0;
    for (size_t j = 0; j < vx.cols(); ++j) {
      double d = vx.at(i, j) - mean;
      var += d * d;
    }
    var /= static_cast<double>(vx.cols());
    double inv = 1.0 / std::sqrt(var + eps);
    for (size_t j = 0; j < vx.cols(); ++j)
      out.at(i, j) = (vx.at(i, j) - mean) * inv * vg.at(0, j) + vb.at(0, j);
  }
  return push(std::move(out), [x, gain, bias, eps](Tape& t, size_t id) {
    const Tensor& g = t.grad_mut(id);
    const Tensor& vx = t.value_at(x.id);
    const Tensor& vg = t.value_at(gain.id);
    Tensor& gx = t.grad_mut(x.id);
    Tensor& ggain = t.grad_mut(gain.id);
    Tensor& gbias = t.grad_mut(bias.id);
    size_t d = vx.cols();
    for (size_t i = 0; i < vx.rows(); ++i) {
      double mean = 0;
      for (size_t j = 0; j < d; ++j) mean += vx.at(i, j);
      mean /= static_cast<double>(d);
      double var = 0;
      for (size_t j = 0; j < d; ++j) {
        double diff = vx.at(i, j) - mean;
        var += diff * diff;
      }
      var /= static_cast<double>(d);
      double inv = 1.0 / std::sqrt(var + eps);
      double mean_dg = 0, mean_dg_xhat = 0;
      for (size_t j = 0; j < d; ++j) {
        double xhat = (vx.at(i, j) - mean) * inv;
        double dg = g.at(i, j) * vg.at(0, j);
        mean_dg += dg;
        mean_dg_xhat += dg * xhat;
        ggain.at(0, j) += g.at(i, j) * xhat;
        gbias.at(0, j) += g.at(i, j);
      }
      mean_dg /= static_cast<double>(d);
      mean_dg_xhat /= static_cast<double>(d);
      for (size_t j = 0; j < d; ++j) {
        double xhat = (vx.at(i, j) - mean) * inv;
        double dg = g.at(i, j) * vg.at(0, j);
        gx.at(i, j) += inv * (dg - mean_dg - xhat * mean_dg_xhat);
      }
    }
  });
}

Var Tape::concat_cols(const std::vector<Var>& xs) {
  if (xs.empty()) throw_invariant("EmptyConcat", "concat_cols of zero tensors");
  size_t rows = value_at(xs[0].id).rows();
  size_t cols = 0;
  for (const auto& x : xs) {
    const Tensor& v = value_at(x.id);
    if (v.rows() != rows)
      throw_invariant("ShapeMismatch", "concat_cols: row counts differ");
    cols += v.cols();
  }
  Tensor out(rows, cols);
  size_t offset = 0;
  for (const auto& x : xs) {
    const Tensor& v = value_at(x.id);
    for (size_t i = 0; i < rows; ++i)
      for (size_t j = 0; j < v.cols(); ++j) out.at(i, offset + j) = v.at(i, j);
    offset += v.cols();
  }
  std::vector<Var> parts = xs;
  return push(std::move(out), [parts](Tape& t, size_t id) {
    const Tensor& g = t.grad_mut(id);
    size_t offset = 0;
    for (const auto& x : parts) {
      Tensor& gx = t.grad_mut(x.id);
      for (size_t i = 0; i < gx.rows(); ++i)
        for (size_t j = 0; j < gx.cols(); ++j) gx.at(i, j) += g.at(i, offset + j);
      offset += gx.cols();
    }
  });
}

Var Tape::concat_rows(const std::vector<Var>& xs) {
  if (xs.empty()) throw_invariant("EmptyConcat", "concat_rows of zero tensors");
  size_t cols = value_at(xs[0].id).cols();
  size_t rows = 0;
  for (const auto& x : xs) {
    const Tensor& v = value_at(x.id);
    if (v.cols() != cols)
      throw_invariant("ShapeMismatch", "concat_rows: column counts differ");
    rows += v.rows();
  }
  Tensor out(rows, cols);
  size_t offset = 0;
  for (const auto& x : xs) {
    const Tensor& v = value_at(x.id);
    for (size_t i = 0; i < v.rows(); ++i)
      for (size_t j = 0; j < cols; ++j) out.at(offset + i, j) = v.at(i, j);
    offset += v.rows();
  }
  std::vector<Var> parts = xs;
  return push(std::move(out), [parts](Tape& t, size_t id) {
    const Tensor& g = t.grad_mut(id);
    size_t offset = 0;
    for (const auto& x : parts) {
      Tensor& gx = t.grad_mut(x.id);
      for (size_t i = 0; i < gx.rows(); ++i)
        for (size_t j = 0; j < gx.cols(); ++j) gx.at(i, j) += g.at(offset + i, j);
      offset += gx.rows();
    }
  });
}

Var Tape::slice_cols(Var x, size_t begin, size_t len) {
  const Tensor& vx = value_at(x.id);
  if (begin + len > vx.cols())
    throw_invariant("SliceOutOfRange", "slice_cols [" + std::to_string(begin) + ", " +
                                           std::to_string(begin + len) + ") of " +
                                           vx.shape_string());
  Tensor out(vx.rows(), len);
  for (size_t i = 0; i < vx.rows(); ++i)
    for (size_t j = 0; j < len; ++j) out.at(i, j) = vx.at(i, begin + j);
  return push(std::move(out), [x, begin, len](Tape& t, size_t id) {
    const Tensor& g = t.grad_mut(id);
    Tensor& gx = t.grad_mut(x.id);
    for (size_t i = 0; i < g.rows(); ++i)
      for (size_t j = 0; j < len; ++j) gx.at(i, begin + j) += g.at(i, j);
  });
}

Var Tape::slice_rows(Var x, size_t begin, size_t len) {
  const Tensor& vx = value_at(x.id);
  if (begin + len > vx.rows())
    throw_invariant("SliceOutOfRange", "slice_rows [" + std::to_string(begin) + ", " +
                                           std::to_string(begin + len) + ") of " +
                                           vx.shape_string());
  Tensor out(len, vx.cols());
  for (size_t i = 0; i < len; ++i)
    for (size_t j = 0; j < vx.cols(); ++j) out.at(i, j) = vx.at(begin + i, j);
  return push(std::move(out), [x, begin, len](Tape& t, size_t id) {
    const Tensor& g = t.grad_mut(id);
    Tensor& gx = t.grad_mut(x.id);
    for (size_t i = 0; i < len; ++i)
      for (size_t j = 0; j < g.cols(); ++j) gx.at(begin + i, j) += g.at(i, j);
  });
}

Var Tape::row(Var x, size_t i) {
  const Tensor& vx = value_at(x.id);
  if (i >= vx.rows())
    throw_invariant("RowOutOfRange",
                    "row " + std::to_string(i) + " of " + vx.shape_string());
  Tensor out(1, vx.cols());
  for (size_t j = 0; j < vx.cols(); ++j) out.at(0, j) = vx.at(i, j);
  return push(std::move(out), [x, i](Tape& t, size_t id) {
    const Tensor& g = t.grad_mut(id);
    Tensor& gx = t.grad_mut(x.id);
    for (size_t j = 0; j < g.cols(); ++j) gx.at(i, j) += g.at(0, j);
  });
}

Var Tape::mean_rows(Var x) {
  const Tensor& vx = value_at(x.id);
  if (vx.rows() == 0) throw_invariant("EmptyMean", "mean_rows over zero rows");
  Tensor out(1, vx.cols());
  for (size_t i = 0; i < vx.rows(); ++i)
    for (size_t j = 0; j < vx.cols(); ++j) out.at(0, j) += vx.at(i, j);
  for (size_t j = 0; j < vx.cols(); ++j) out.at(0, j) /= static_cast<double>(vx.rows());
  return push(std::move(out), [x](Tape& t, size_t id) {
    const Tensor& g = t.grad_mut(id);
    Tensor& gx = t.grad_mut(x.id);
    double inv = 1.0 / static_cast<double>(gx.rows());
    for (size_t i = 0; i < gx.rows(); ++i)
      for (size_t j = 0; j < gx.cols(); ++j) gx.at(i, j) += g.at(0, j) * inv;
  });
}

Var Tape::bce_mean(Var probs, const Tensor& targets) {
  const Tensor& vp = value_at(probs.id);
  require_same_shape(vp, targets, "bce_mean");
  if (vp.cols() != 1) throw_invariant("ShapeMismatch", "bce_mean expects n x 1 probabilities");
  constexpr double kClamp = 1e-12;
  double loss = 0;
  size_t n = vp.rows();
  for (size_t i = 0; i < n; ++i) {
    double p = std::min(std::max(vp.at(i, 0), kClamp), 1.0 - kClamp);
    double t = targets.at(i, 0);
    loss += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
  }
  Tensor out(1, 1);
  out.at(0, 0) = loss / static_cast<double>(n);
  Tensor captured = targets;
  return push(std::move(out), [probs, captured](Tape& t, size_t id) {
    double g = t.grad_mut(id).at(0, 0);
    const Tensor& vp = t.value_at(probs.id);
    Tensor& gp = t.grad_mut(probs.id);
    size_t n = vp.rows();
    for (size_t i = 0; i < n; ++i) {
      double p = std::min(std::max(vp.at(i, 0), 1e-12), 1.0 - 1e-12);
      double target = captured.at(i, 0);
      gp.at(i, 0) += g * (-(target / p) + (1.0 - target) / (1.0 - p)) / static_cast<double>(n);
    }
  });
}

Var Tape::softmax_ce_mean(Var logits, const std::vector<int>& labels) {
  const Tensor& vl = value_at(logits.id);
  if (vl.rows() != labels.size())
    throw_invariant("ShapeMismatch", "softmax_ce_mean: " + std::to_string(labels.size()) +
                                         " labels for " + vl.shape_string() + " logits");
  size_t n = vl.rows();
  size_t c = vl.cols();
  Tensor soft(n, c);
  double loss = 0;
  for (size_t i = 0; i < n; ++i) {
    int label = labels[i];
    if (label < 0 || static_cast<size_t>(label) >= c)
      throw_invariant("LabelOutOfRange", "class label " + std::to_string(label));
    double mx = vl.at(i, 0);
    for (size_t j = 1; j < c; ++j) mx = std::max(mx, vl.at(i, j));
    double sum = 0;
    for (size_t j = 0; j < c; ++j) {
      soft.at(i, j) = std::exp(vl.at(i, j) - mx);
      sum += soft.at(i, j);
    }
    for (size_t j = 0; j < c; ++j) soft.at(i, j) /= sum;
    loss += -std::log(std::max(soft.at(i, static_cast<size_t>(label)), 1e-300));
  }
  Tensor out(1, 1);
  out.at(0, 0) = loss / static_cast<double>(n);
  std::vector<int> captured = labels;
  return push(std::move(out), [logits, soft, captured](Tape& t, size_t id) {
    double g = t.grad_mut(id).at(0, 0);
    Tensor& gl = t.grad_mut(logits.id);
    size_t n = soft.rows();
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < soft.cols(); ++j) {
        double onehot = (static_cast<size_t>(captured[i]) == j) ? 1.0 : 0.0;
        gl.at(i, j) += g * (soft.at(i, j) - onehot) / static_cast<double>(n);
      }
  });
}

Var Tape::grad_scale(Var x, double factor) {
  Tensor out = value_at(x.id);
  return push(std::move(out), [x, factor](Tape& t, size_t id) {
    const auto& g = t.grad_mut(id).raw();
    auto& gx = t.grad_mut(x.id).raw();
    for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
  });
}

Var Tape::dropout(Var x, double rate, bool training) {
  if (rate < 0.0 || rate >= 1.0)
    throw_invariant("InvalidDropout", "rate " + std::to_string(rate) + " outside [0, 1)");
  if (!training || rate == 0.0) {
    Tensor out = value_at(x.id);
    return push(std::move(out), [x](Tape& t, size_t id) {
      const auto& g = t.grad_mut(id).raw();
      auto& gx = t.grad_mut(x.id).raw();
      for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  const Tensor& vx = value_at(x.id);
  Tensor mask(vx.rows(), vx.cols());
  std::bernoulli_distribution keep(1.0 - rate);
  double inv_keep = 1.0 / (1.0 - rate);
  for (auto& m : mask.raw()) m = keep(rng_) ? inv_keep : 0.0;
  Tensor out = vx;
  for (size_t i = 0; i < out.size(); ++i) out.raw()[i] *= mask.raw()[i];
  return push(std::move(out), [x, mask](Tape& t, size_t id) {
    const auto& g = t.grad_mut(id).raw();
    auto& gx = t.grad_mut(x.id).raw();
    for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask.raw()[i];
  });
}

void Tape::backward(Var loss) {
  const Tensor& v = nodes_[loss.id].value;
  if (v.rows() != 1 || v.cols() != 1)
    throw_invariant("NotScalar", "backward seed is " + v.shape_string() + ", expected 1x1");
  nodes_[loss.id].grad.at(0, 0) = 1.0;
  for (size_t i = loss.id + 1; i-- > 0;) {
    if (nodes_[i].backward) nodes_[i].backward(*this, i);
  }
}

}  // namespace daud

#pragma once

#include "daud/errors.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace daud {

// Dense row-major matrix of doubles. Vectors are 1 x d rows; a sequence of n
// vectors is n x d.
class Tensor {
 public:
  Tensor() = default;
  Tensor(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Tensor from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Tensor t(rows.size(), rows[0].size());
    for (size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != t.cols_)
        throw_invariant("RaggedRows", "row " + std::to_string(i) + " has mismatched width");
      for (size_t j = 0; j < t.cols_; ++j) t.at(i, j) = rows[i][j];
    }
    return t;
  }

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(size_t i, size_t j) { return data_[i * cols_ + j]; }
  double at(size_t i, size_t j) const { return data_[i * cols_ + j]; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  double scalar() const {
    if (rows_ != 1 || cols_ != 1)
      throw_invariant("NotScalar", "tensor is " + shape_string() + ", expected 1x1");
    return data_[0];
  }

  bool same_shape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  std::string shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  void fill(double v) { data_.assign(data_.size(), v); }

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw_invariant("ShapeMismatch", std::string(op) + ": " + a.shape_string() + " vs " +
                                         b.shape_string());
}

}  // namespace daud

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "treglab/errors.hpp"

namespace treglab {

int64_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

// Dense row-major tensor of doubles. The gradient buffer exists exactly
// when requires_grad is set.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape)
      : shape_(std::move(shape)),
        values_(static_cast<size_t>(shape_numel(shape_)), 0.0) {}
  Tensor(std::vector<int> shape, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  const std::vector<int>& shape() const { return shape_; }
  int64_t size() const { return static_cast<int64_t>(values_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(shape_.size()); }

  // 2-D accessors; rank is validated by the ops that use them.
  int rows() const { return shape_[0]; }
  int cols() const { return shape_.size() == 1 ? shape_[0] : shape_[1]; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double& operator[](size_t i) { return values_[i]; }
  double operator[](size_t i) const { return values_[i]; }
  double& at(int r, int c) { return values_[static_cast<size_t>(r) * static_cast<size_t>(cols()) + static_cast<size_t>(c)]; }
  double at(int r, int c) const { return values_[static_cast<size_t>(r) * static_cast<size_t>(cols()) + static_cast<size_t>(c)]; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool flag);

  std::vector<double>& grad();
  const std::vector<double>& grad() const;
  void zero_grad();

  bool all_finite() const;

 private:
  std::vector<int> shape_;
  std::vector<double> values_;
  bool requires_grad_ = false;
  std::vector<double> grad_;
};

// Throws NumericError naming `context` if any value is NaN/Inf.
void check_finite(const Tensor& t, const std::string& context);
void check_finite(const std::vector<double>& v, const std::string& context);

}  // namespace treglab

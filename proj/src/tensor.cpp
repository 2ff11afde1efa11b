#include "treglab/tensor.hpp"

#include <sstream>

namespace treglab {

int64_t shape_numel(const std::vector<int>& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_numel(shape_) != static_cast<int64_t>(values_.size())) {
    throw ShapeError("value count " + std::to_string(values_.size()) +
                     " does not match shape " + shape_str(shape_));
  }
}

void Tensor::set_requires_grad(bool flag) {
  requires_grad_ = flag;
  if (flag) {
    grad_.assign(values_.size(), 0.0);
  } else {
    grad_.clear();
    grad_.shrink_to_fit();
  }
}

std::vector<double>& Tensor::grad() {
  if (!requires_grad_) throw StateError("gradient requested for a tensor without requires_grad");
  return grad_;
}

const std::vector<double>& Tensor::grad() const {
  if (!requires_grad_) throw StateError("gradient requested for a tensor without requires_grad");
  return grad_;
}

void Tensor::zero_grad() {
  if (requires_grad_) grad_.assign(values_.size(), 0.0);
}

bool Tensor::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void check_finite(const Tensor& t, const std::string& context) {
  if (!t.all_finite()) throw NumericError("non-finite value in " + context);
}

void check_finite(const std::vector<double>& v, const std::string& context) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError("non-finite value in " + context);
  }
}

}  // namespace treglab

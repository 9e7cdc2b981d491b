#include "snnkit/tensor.hpp"

#include <atomic>
#include <cmath>
#include <utility>

#include "snnkit/error.hpp"

namespace snnkit {

namespace {
std::atomic<bool> g_checked{true};

size_t shape_product(const std::vector<size_t>& shape) {
  size_t n = 1;
  for (size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}
}  // namespace

void set_checked_mode(bool on) { g_checked.store(on, std::memory_order_relaxed); }
bool checked_mode() { return g_checked.load(std::memory_order_relaxed); }

Tensor::Tensor(std::vector<size_t> shape) : shape_(std::move(shape)) {
  data_.assign(shape_product(shape_), 0.0);
}

Tensor::Tensor(std::vector<size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size())
    throw DimensionError("tensor data length does not match shape product");
  if (checked_mode() && !all_finite())
    throw DomainError("tensor contains non-finite entries");
}

Tensor Tensor::full(std::vector<size_t> shape, double value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::reshaped(std::vector<size_t> new_shape) const {
  if (shape_product(new_shape) != data_.size())
    throw DimensionError("reshape must preserve element count");
  Tensor t;
  t.shape_ = std::move(new_shape);
  t.data_ = data_;
  return t;
}

Tensor Tensor::row_slice(size_t b0, size_t b1) const {
  if (shape_.empty()) throw DimensionError("row_slice needs a leading dimension");
  if (b0 >= b1 || b1 > shape_[0]) throw DimensionError("row_slice range out of bounds");
  size_t per = data_.size() / shape_[0];
  std::vector<size_t> shape = shape_;
  shape[0] = b1 - b0;
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_.assign(data_.begin() + b0 * per, data_.begin() + b1 * per);
  return t;
}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

double Tensor::squared_norm() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return s;
}

double Tensor::l2_norm() const { return std::sqrt(squared_norm()); }

double Tensor::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::fabs(x));
  return m;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (!same_shape(other)) throw DimensionError("tensor += shape mismatch");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  if (!same_shape(other)) throw DimensionError("tensor -= shape mismatch");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

bool Tensor::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

Tensor zeros_like(const Tensor& t) { return Tensor(t.shape()); }

}  // namespace snnkit

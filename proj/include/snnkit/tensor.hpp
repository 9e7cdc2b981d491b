#pragma once

#include <cstddef>
#include <vector>

namespace snnkit {

// Toggles finiteness validation at tensor construction. On by default so
// tests and user-facing entry points reject NaN/Inf early; training loops
// switch it off because their shapes are validated once at network build.
void set_checked_mode(bool on);
bool checked_mode();

// Dense N-dimensional array of 64-bit reals, row-major.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<size_t> shape);  // zero-filled
  Tensor(std::vector<size_t> shape, std::vector<double> data);

  static Tensor full(std::vector<size_t> shape, double value);

  const std::vector<size_t>& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t dim(size_t i) const { return shape_[i]; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  double& at2(size_t i, size_t j) { return data_[i * shape_[1] + j]; }
  double at2(size_t i, size_t j) const { return data_[i * shape_[1] + j]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  // Size-preserving row-major reinterpretation.
  Tensor reshaped(std::vector<size_t> new_shape) const;

  // Rows [b0, b1) along the leading dimension.
  Tensor row_slice(size_t b0, size_t b1) const;

  void fill(double v);
  double squared_norm() const;  // index-ordered summation
  double l2_norm() const;
  double max_abs() const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s);

  bool all_finite() const;

 private:
  std::vector<size_t> shape_;
  std::vector<double> data_;
};

Tensor zeros_like(const Tensor& t);

}  // namespace snnkit

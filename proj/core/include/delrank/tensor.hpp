#pragma once

#include <cstddef>
#include <vector>

namespace delrank {

// Dense row-major tensor of 64-bit floats. The kernels only ever produce
// rank 0 (scalar), rank 1 (vector) and rank 2 (matrix) shapes.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double v);
  static Tensor from_vector(std::vector<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  // A tensor with one element broadcasts as a scalar in elementwise ops.
  bool is_scalar() const { return data_.size() == 1; }

  std::size_t rows() const;
  std::size_t cols() const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;

  // Value of a one-element tensor; throws otherwise.
  double item() const;

  bool all_finite() const;

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace delrank

#include "delrank/tensor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace delrank {

namespace {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

Tensor Tensor::scalar(double v) {
  Tensor t{std::vector<std::size_t>{}};
  t.data_[0] = v;
  return t;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  return Tensor{std::move(shape)};
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
  Tensor t{std::move(shape)};
  for (double& x : t.data_) x = v;
  return t;
}

Tensor Tensor::from_vector(std::vector<double> values) {
  Tensor t;
  t.shape_ = {values.size()};
  t.data_ = std::move(values);
  return t;
}

std::size_t Tensor::rows() const {
  if (shape_.size() != 2) throw std::invalid_argument("Tensor::rows: not a matrix");
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() != 2) throw std::invalid_argument("Tensor::cols: not a matrix");
  return shape_[1];
}

double& Tensor::at(std::size_t r, std::size_t c) {
  return data_[r * cols() + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return data_[r * cols() + c];
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw std::invalid_argument("Tensor::item: tensor has " + std::to_string(data_.size()) +
                                " elements, expected 1");
  }
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace delrank

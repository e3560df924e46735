#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "delrank/tensor.hpp"

namespace delrank {

// Named trainable parameters. Iteration order is lexicographic by name
// (std::map), which pins the optimizer update order and the checkpoint
// layout for reproducible runs.
class ParamStore {
 public:
  void add(const std::string& name, Tensor value);
  bool contains(const std::string& name) const;
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t total_elements() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Tensor> params_;
};

// Checkpoint format: magic, parameter count, then per parameter (in store
// order) the name, shape and raw little-endian float64 payload.
void save_checkpoint(const ParamStore& params, const std::string& path);
ParamStore load_checkpoint(const std::string& path);

}  // namespace delrank

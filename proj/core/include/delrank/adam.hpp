#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "delrank/param_store.hpp"
#include "delrank/tape.hpp"

namespace delrank {

struct AdamConfig {
  double lr = 1e-3;
  double b1 = 0.9;
  double b2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moments are allocated lazily per parameter and
// keyed by name; update order follows the store's lexicographic order.
class AdamState {
 public:
  explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(ParamStore& params, const GradMap& grads);

  long step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  long step_ = 0;
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
};

}  // namespace delrank

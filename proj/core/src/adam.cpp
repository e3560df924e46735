#include "delrank/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace delrank {

void AdamState::step(ParamStore& params, const GradMap& grads) {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.b1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.b2, static_cast<double>(step_));
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) {
      throw std::invalid_argument("AdamState::step: missing gradient for '" + name + "'");
    }
    const Tensor& g = git->second;
    if (!g.same_shape(p)) {
      throw std::invalid_argument("AdamState::step: gradient shape mismatch for '" + name + "'");
    }
    Tensor& m = m_.try_emplace(name, Tensor::zeros(p.shape())).first->second;
    Tensor& v = v_.try_emplace(name, Tensor::zeros(p.shape())).first->second;
    for (std::size_t i = 0; i < p.numel(); ++i) {
      m[i] = cfg_.b1 * m[i] + (1.0 - cfg_.b1) * g[i];
      v[i] = cfg_.b2 * v[i] + (1.0 - cfg_.b2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

}  // namespace delrank

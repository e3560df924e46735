#include "delrank/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace delrank {

namespace {

double eval(const ScalarFn& f, const ParamStore& params) {
  Tape tape;
  const Var out = f(tape, params);
  return out.value().item();
}

}  // namespace

double grad_check_against(const ScalarFn& f, const ParamStore& params, const GradMap& analytic,
                          double eps) {
  if (eps < 1e-7 || eps > 1e-3) {
    throw std::invalid_argument("grad_check: eps must lie in [1e-7, 1e-3]");
  }
  if (!std::isfinite(eval(f, params))) {
    throw std::domain_error("grad_check: forward value is not finite");
  }
  ParamStore work = params;
  double max_rel = 0.0;
  for (const auto& [name, value] : params) {
    auto ait = analytic.find(name);
    if (ait == analytic.end()) {
      throw std::invalid_argument("grad_check: analytic gradient missing '" + name + "'");
    }
    const Tensor& a = ait->second;
    Tensor& w = work.at(name);
    for (std::size_t i = 0; i < value.numel(); ++i) {
      const double orig = w[i];
      w[i] = orig + eps;
      const double up = eval(f, work);
      w[i] = orig - eps;
      const double down = eval(f, work);
      w[i] = orig;
      const double fd = (up - down) / (2.0 * eps);
      const double rel = std::abs(a[i] - fd) / std::max(1e-8, std::abs(fd));
      if (rel > max_rel) max_rel = rel;
    }
  }
  return max_rel;
}

double grad_check(const ScalarFn& f, const ParamStore& params, double eps) {
  Tape tape;
  const Var out = f(tape, params);
  GradMap analytic = tape.backward(out, params);
  return grad_check_against(f, params, analytic, eps);
}

}  // namespace delrank

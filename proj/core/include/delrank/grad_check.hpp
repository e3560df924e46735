#pragma once

#include <functional>

#include "delrank/param_store.hpp"
#include "delrank/tape.hpp"

namespace delrank {

// A scalar-valued forward pass over a parameter store. Must be pure: calling
// it twice with the same parameters yields the same value.
using ScalarFn = std::function<Var(Tape&, const ParamStore&)>;

// Max over all parameter components of
//   |analytic - central_difference| / max(1e-8, |central_difference|)
// with the analytic gradient taken from the tape. eps must lie in
// [1e-7, 1e-3]. Throws if the forward value is not finite.
double grad_check(const ScalarFn& f, const ParamStore& params, double eps = 1e-5);

// Same comparison against an externally supplied analytic gradient. Used by
// negative tests and the fault-injection hook, where the supplied gradient
// is deliberately wrong.
double grad_check_against(const ScalarFn& f, const ParamStore& params, const GradMap& analytic,
                          double eps = 1e-5);

}  // namespace delrank

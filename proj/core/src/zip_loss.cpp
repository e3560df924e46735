#include "delrank/zip_loss.hpp"

#include <cmath>
#include <stdexcept>

namespace delrank {

namespace {

constexpr double kLambdaFloor = 1e-8;

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("ZipParams: initial pi must lie in (0, 1)");
  return std::log(p / (1.0 - p));
}

// -sum_i log P(count_i | lambda_i, sigmoid(pi_logit)), tape-recorded.
// Zero counts use log(pi + (1-pi) e^-lambda) = LSE(log pi, log(1-pi) - lambda)
// with LSE(a, b) = a + softplus(b - a); log pi = -softplus(-logit) and
// log(1-pi) = -softplus(logit) keep everything in the stable regime.
Var zip_nll_terms(const std::vector<long>& counts, Var lambdas, Var pi_logit) {
  Tape& tape = *lambdas.tape;
  std::vector<std::size_t> zero_idx;
  std::vector<std::size_t> pos_idx;
  std::vector<double> pos_counts;
  double lgamma_sum = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0) throw std::invalid_argument("zip_nll_batch: negative count");
    if (counts[i] == 0) {
      zero_idx.push_back(i);
    } else {
      pos_idx.push_back(i);
      pos_counts.push_back(static_cast<double>(counts[i]));
      lgamma_sum += std::lgamma(static_cast<double>(counts[i]) + 1.0);
    }
  }

  const Var clamped = max_floor(lambdas, kLambdaFloor);
  Var loglik = tape.constant_scalar(0.0);

  if (!zero_idx.empty()) {
    const Var lam0 = select(clamped, zero_idx);
    const Var log_pi = scale(softplus(scale(pi_logit, -1.0)), -1.0);
    const Var log_1mpi = scale(softplus(pi_logit), -1.0);
    const Var b = sub(log_1mpi, lam0);            // broadcast scalar - vector
    const Var lse = add(log_pi, softplus(sub(b, log_pi)));
    loglik = add(loglik, sum(lse));
  }

  if (!pos_idx.empty()) {
    const Var lamp = select(clamped, pos_idx);
    const Var r = tape.constant_vector(pos_counts);
    const Var count_term = sum(mul(r, log(lamp)));
    const Var lam_term = sum(lamp);
    // n_pos * log(1-pi) - sum lgamma(r+1)
    const Var prior = scale(softplus(pi_logit), -static_cast<double>(pos_idx.size()));
    loglik = add(loglik, add(sub(count_term, lam_term), add(prior, tape.constant_scalar(-lgamma_sum))));
  }

  return scale(loglik, -1.0);
}

}  // namespace

void ZipParams::init(ParamStore& store, double pi_matrix_init, double pi_target_init) {
  store.add(kPiMatrixLogit, Tensor::scalar(logit(pi_matrix_init)));
  store.add(kPiTargetLogit, Tensor::scalar(logit(pi_target_init)));
}

double zip_log_pmf(long count, double lambda, double pi) {
  if (count < 0) throw std::invalid_argument("zip_log_pmf: negative count");
  if (pi < 0.0 || pi >= 1.0) throw std::invalid_argument("zip_log_pmf: pi must lie in [0, 1)");
  lambda = std::max(lambda, kLambdaFloor);
  if (count == 0) {
    const double a = std::log(pi);          // -inf at pi = 0 is fine below
    const double b = std::log1p(-pi) - lambda;
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
  }
  const double r = static_cast<double>(count);
  return std::log1p(-pi) + r * std::log(lambda) - lambda - std::lgamma(r + 1.0);
}

Var zip_nll_batch(const std::vector<long>& matrix_counts, const std::vector<long>& target_counts,
                  Var lambda_matrix, Var lambda_enrich, Var pi_matrix_logit, Var pi_target_logit) {
  const std::size_t n = matrix_counts.size();
  if (target_counts.size() != n || lambda_matrix.value().numel() != n ||
      lambda_enrich.value().numel() != n) {
    throw std::invalid_argument("zip_nll_batch: length mismatch");
  }
  if (n == 0) throw std::invalid_argument("zip_nll_batch: empty batch");
  const Var matrix_nll = zip_nll_terms(matrix_counts, lambda_matrix, pi_matrix_logit);
  const Var target_nll =
      zip_nll_terms(target_counts, add(lambda_matrix, lambda_enrich), pi_target_logit);
  return add(matrix_nll, target_nll);
}

}  // namespace delrank

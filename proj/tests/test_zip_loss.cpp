#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "delrank/grad_check.hpp"
#include "delrank/rng.hpp"
#include "delrank/zip_loss.hpp"
#include "oracles.hpp"

using namespace delrank;

TEST_CASE("zip_log_pmf closed forms") {
  // pi -> 1: all mass at zero.
  CHECK(zip_log_pmf(0, 2.0, 1.0 - 1e-12) == doctest::Approx(0.0).epsilon(1e-9));
  // Poisson(0+) at zero with no inflation.
  CHECK(zip_log_pmf(0, 1e-12, 0.0) == doctest::Approx(0.0).epsilon(1e-7));
  // r=3, lambda=2, pi=0.3: log(0.7 * 8 * e^-2 / 6).
  const double expected = std::log(0.7 * 8.0 * std::exp(-2.0) / 6.0);
  CHECK(zip_log_pmf(3, 2.0, 0.3) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::exp(zip_log_pmf(3, 2.0, 0.3)) == doctest::Approx(0.1263128).epsilon(1e-6));

  CHECK_THROWS_AS(zip_log_pmf(-1, 2.0, 0.3), std::invalid_argument);
}

TEST_CASE("zip_log_pmf agrees with the extended-precision oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const long r = static_cast<long>(rng.bounded(40));
    const double lambda = rng.uniform(1e-6, 30.0);
    const double pi = rng.uniform(0.0, 0.95);
    CHECK(zip_log_pmf(r, lambda, pi) ==
          doctest::Approx(oracle::zip_log_pmf_reference(r, lambda, pi)).epsilon(1e-11));
  }
}

TEST_CASE("truncated pmf sums to one") {
  for (const double lambda : {0.1, 1.0, 5.0, 20.0, 50.0}) {
    for (const double pi : {0.0, 0.3, 0.9}) {
      const long k_max = static_cast<long>(lambda + 20.0 * std::sqrt(lambda) + 20.0);
      long double total = 0.0L;
      for (long k = 0; k <= k_max; ++k) total += std::exp(static_cast<long double>(zip_log_pmf(k, lambda, pi)));
      CHECK(static_cast<double>(total) >= 1.0 - 1e-9);
      CHECK(static_cast<double>(total) <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("batch NLL equals the sum of individual log pmfs") {
  ParamStore store;
  ZipParams::init(store, 0.35, 0.55);
  const double pi_m = 0.35;
  const double pi_r = 0.55;

  const std::vector<long> m_counts = {0, 4};
  const std::vector<long> r_counts = {2, 0};
  const std::vector<double> lam_m = {0.8, 1.7};
  const std::vector<double> lam_r = {2.5, 0.4};

  Tape tape;
  const Var loss = zip_nll_batch(m_counts, r_counts, tape.constant_vector(lam_m),
                                 tape.constant_vector(lam_r),
                                 tape.param(store, ZipParams::kPiMatrixLogit),
                                 tape.param(store, ZipParams::kPiTargetLogit));

  double expected = 0.0;
  for (int i = 0; i < 2; ++i) {
    expected -= zip_log_pmf(m_counts[i], lam_m[i], pi_m);
    expected -= zip_log_pmf(r_counts[i], lam_m[i] + lam_r[i], pi_r);
  }
  CHECK(loss.item() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("single all-zero record with saturated inflation has near-zero loss") {
  ParamStore store;
  ZipParams::init(store, 1.0 - 1e-9, 1.0 - 1e-9);
  Tape tape;
  const Var loss = zip_nll_batch({0}, {0}, tape.constant_vector({1.0}),
                                 tape.constant_vector({2.0}),
                                 tape.param(store, ZipParams::kPiMatrixLogit),
                                 tape.param(store, ZipParams::kPiTargetLogit));
  CHECK(loss.item() == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(loss.item() >= 0.0);
}

TEST_CASE("zip NLL is non-negative") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    ParamStore store;
    ZipParams::init(store, rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95));
    const std::size_t n = 1 + rng.bounded(6);
    std::vector<long> m(n), r(n);
    std::vector<double> lm(n), lr(n);
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = static_cast<long>(rng.bounded(12));
      r[i] = static_cast<long>(rng.bounded(12));
      lm[i] = rng.uniform(0.05, 8.0);
      lr[i] = rng.uniform(0.05, 8.0);
    }
    Tape tape;
    const Var loss = zip_nll_batch(m, r, tape.constant_vector(lm), tape.constant_vector(lr),
                                   tape.param(store, ZipParams::kPiMatrixLogit),
                                   tape.param(store, ZipParams::kPiTargetLogit));
    CHECK(loss.item() >= 0.0);
  }
}

TEST_CASE("zip NLL length mismatch is rejected") {
  ParamStore store;
  ZipParams::init(store);
  Tape tape;
  CHECK_THROWS_AS(zip_nll_batch({0, 1}, {1}, tape.constant_vector({1.0, 2.0}),
                                tape.constant_vector({1.0, 2.0}),
                                tape.param(store, ZipParams::kPiMatrixLogit),
                                tape.param(store, ZipParams::kPiTargetLogit)),
                  std::invalid_argument);
}

TEST_CASE("zip NLL gradients pass the finite-difference check") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 3 + rng.bounded(4);
    std::vector<long> m(n), r(n);
    std::vector<double> lm(n), lr(n);
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = static_cast<long>(rng.bounded(8));
      r[i] = static_cast<long>(rng.bounded(8));
      lm[i] = rng.uniform(0.2, 4.0);
      lr[i] = rng.uniform(0.2, 4.0);
    }
    ParamStore params;
    params.add("lam_m", Tensor::from_vector(lm));
    params.add("lam_r", Tensor::from_vector(lr));
    ZipParams::init(params, rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9));

    auto f = [&m, &r](Tape& t, const ParamStore& ps) {
      return zip_nll_batch(m, r, t.param(ps, "lam_m"), t.param(ps, "lam_r"),
                           t.param(ps, ZipParams::kPiMatrixLogit),
                           t.param(ps, ZipParams::kPiTargetLogit));
    };
    CHECK(grad_check(f, params, 1e-5) <= 1e-4);
  }
}

TEST_CASE("NLL over sampled counts is minimized near the generator's parameters") {
  Rng rng(12345);
  const double lambda_true = 3.0;
  const double pi_true = 0.3;
  const std::size_t n = 20000;
  std::vector<long> counts(n);
  for (std::size_t i = 0; i < n; ++i) counts[i] = rng.zip_sample(lambda_true, pi_true);

  const std::vector<double> lambda_grid = {1.0, 2.0, 2.5, 3.0, 3.5, 4.0, 6.0};
  const std::vector<double> pi_grid = {0.1, 0.2, 0.3, 0.4, 0.5};
  double best = 1e300;
  double best_lambda = 0.0, best_pi = 0.0;
  for (const double lambda : lambda_grid) {
    for (const double pi : pi_grid) {
      double nll = 0.0;
      for (const long c : counts) nll -= zip_log_pmf(c, lambda, pi);
      if (nll < best) {
        best = nll;
        best_lambda = lambda;
        best_pi = pi;
      }
    }
  }
  CHECK(std::abs(best_lambda - lambda_true) <= 0.5);
  CHECK(std::abs(best_pi - pi_true) <= 0.1);
}

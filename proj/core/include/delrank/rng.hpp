#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace delrank {

// Seeded generator with fully specified samplers. std::mt19937_64's output
// sequence is pinned by the standard; the distributions here are implemented
// by hand so that a (spec, seed) pair produces byte-identical datasets on
// every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n); rejection sampling, n >= 1.
  std::uint64_t bounded(std::uint64_t n);

  // Box-Muller without caching the second deviate; two uniforms per call.
  double normal();

  double lognormal(double sigma) { return std::exp(sigma * normal()); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Knuth's product method, split into additive chunks so the threshold
  // exp(-lambda) never underflows. Exact for any lambda >= 0.
  long poisson(double lambda);

  // lambda == 0 collapses to the pure Poisson; pi is the excess-zero mass.
  long zip_sample(double lambda, double pi);

  // Deterministic Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// Stream-splitting for nested deterministic contexts (per-epoch shuffles etc).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace delrank

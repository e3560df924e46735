#include "delrank/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace delrank {

std::uint64_t Rng::bounded(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::bounded: n must be positive");
  const std::uint64_t threshold = (~std::uint64_t{0} - n + 1) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t r = gen_();
    if (r >= threshold) return r % n;
  }
}

double Rng::normal() {
  // uniform01 can return 0; shift into (0, 1] for the log.
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

long Rng::poisson(double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("Rng::poisson: negative lambda");
  long total = 0;
  double remaining = lambda;
  constexpr double kChunk = 30.0;
  while (remaining > 0.0) {
    const double step = remaining > kChunk ? kChunk : remaining;
    const double threshold = std::exp(-step);
    long k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform01();
    } while (p > threshold);
    total += k - 1;
    remaining -= step;
  }
  return total;
}

long Rng::zip_sample(double lambda, double pi) {
  if (pi < 0.0 || pi >= 1.0) throw std::invalid_argument("Rng::zip_sample: pi must lie in [0, 1)");
  if (pi > 0.0 && bernoulli(pi)) return 0;
  return poisson(lambda);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined word.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace delrank

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace delrank {

// One library member: packed fingerprint bits, per-pose feature vectors,
// control (matrix) and target read counts, a binary activity label and an
// optional binding constant for evaluation records.
struct CompoundRecord {
  std::string id;
  std::vector<std::uint8_t> fingerprint;  // d/8 bytes, bit i = byte i/8 bit i%8, LSB-first
  std::vector<std::vector<double>> poses;  // P vectors of length m
  long matrix_count = 0;                   // M
  long target_count = 0;                   // R
  int activity = 0;                        // y
  double mol_weight = 0.0;                 // amu
  std::optional<double> ki;                // nM, lower is stronger

  bool fingerprint_bit(std::size_t i) const {
    return (fingerprint[i / 8] >> (i % 8)) & 1u;
  }
  void set_fingerprint_bit(std::size_t i) { fingerprint[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8)); }
};

struct Dataset {
  std::vector<CompoundRecord> records;
  std::size_t fingerprint_bits = 0;  // d
  std::size_t pose_dim = 0;          // m
  std::string provenance;

  std::size_t size() const { return records.size(); }
  // Throws listing the first violated invariant.
  void validate() const;
};

// Generator knobs. Defaults are the desk-scale configuration the acceptance
// runs use; d stays a multiple of 8 to match the packed wire format.
struct SyntheticSpec {
  std::size_t n_compounds = 6000;
  std::size_t fingerprint_bits = 512;    // d
  std::size_t pose_dim = 16;             // m
  std::size_t poses_per_compound = 3;    // P
  double lambda_bg = 1.0;                // background Poisson mean
  double enrich_scale = 1.5;             // c: target mean is lambda_bg + c * affinity
  double pi_matrix = 0.4;                // excess-zero probability of M
  double pi_target = 0.6;                // excess-zero probability of R
  double affinity_spread = 1.0;          // log-normal sigma of latent affinity
  std::size_t pharmacophore_bits = 16;   // leading bits correlated with affinity
  double noise_level = 1.5;              // pose feature noise sigma

  void validate() const;
};

Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& ds, const std::string& path);

// Disjoint partition covering every record; deterministic for a fixed seed.
// Fractions must be positive and sum to 1 within 1e-9.
std::array<Dataset, 3> split_dataset(const Dataset& ds, double train_frac, double val_frac,
                                     double test_frac, std::uint64_t seed);

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Linear-interpolation percentile of the sorted order statistics, p in [0, 100].
double percentile(const std::vector<double>& values, double p);

// True where the eval record's molecular weight falls inside the closed
// [lo-th, hi-th] percentile band of the training molecular weights.
std::vector<bool> mw_percentile_mask(const Dataset& train, const Dataset& eval, double lo,
                                     double hi);

// The noiseless pose feature vector the generator assigns to latent affinity
// `a`; with noise_level = 0 every generated pose equals this exactly. The
// basis is fixed and seed-independent so datasets drawn from different seeds
// share one feature geometry.
std::vector<double> noiseless_pose(double affinity, std::size_t pose_dim);

}  // namespace delrank

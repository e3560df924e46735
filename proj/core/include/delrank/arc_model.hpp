#pragma once

#include <cstdint>
#include <tuple>
#include <utility>
#include <vector>

#include "delrank/data.hpp"
#include "delrank/param_store.hpp"
#include "delrank/tape.hpp"

namespace delrank {

struct ModelConfig {
  std::size_t fingerprint_bits = 0;  // d, taken from the dataset
  std::size_t pose_dim = 0;          // m, taken from the dataset
  std::size_t hidden = 128;
  double varsigma = 1.0;             // structure/sequence balance on h_p
  std::size_t n_iters = 3;           // refinement iterations
  bool use_feedback = true;
  enum class PosePool { kMean } pose_pool = PosePool::kMean;

  void validate() const;
};

// Which head value is exported as the affinity score.
enum class ScoreMode { kEnrichment, kTargetMean };

ScoreMode score_mode_from_string(const std::string& s);
std::string to_string(ScoreMode mode);

// Registers every model parameter, uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
void init_model_params(ParamStore& store, const ModelConfig& cfg, std::uint64_t seed);

// Fingerprint and pooled pose embeddings for one record.
std::pair<Var, Var> encode(Tape& tape, const ParamStore& store, const ModelConfig& cfg,
                           const CompoundRecord& record);

// Refinement loop over the fused representation. Returns (matrix mean,
// enrichment mean, activity likelihood) for one record; positivity of the
// means and p in (0,1) hold by construction of the output nonlinearities.
std::tuple<Var, Var, Var> arc_refine(Tape& tape, const ParamStore& store, const ModelConfig& cfg,
                                     Var h_f, Var h_p);

struct BatchOutputs {
  Var lambda_matrix;  // N
  Var lambda_enrich;  // N
  Var activity;       // N
};

// Whole-batch forward pass; one matrix node per layer instead of per-record
// graphs. Equivalent to encode + arc_refine per record.
BatchOutputs model_forward(Tape& tape, const ParamStore& store, const ModelConfig& cfg,
                           const Dataset& ds, const std::vector<std::size_t>& batch);

// Correction-stage consistency penalty tying normalized counts to the
// activity heads. Batch maxima of both count vectors normalize their side; a
// zero max turns that normalized term into exact zero.
Var consistency_loss(const std::vector<double>& target_counts, Var predicted_counts,
                     const std::vector<int>& labels, Var predicted_activity);

// Affinity scores for every record, in record order. n_threads > 1 scores
// disjoint slices on independent tapes; output is identical regardless.
std::vector<double> score_records(const ParamStore& store, const ModelConfig& cfg,
                                  const Dataset& ds, ScoreMode mode, std::size_t n_threads = 1);

}  // namespace delrank

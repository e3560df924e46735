#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "delrank/adam.hpp"
#include "delrank/arc_model.hpp"
#include "delrank/data.hpp"
#include "delrank/rank_loss.hpp"

namespace delrank {

struct TrainConfig {
  double zip_weight = 1.0;     // fixed at 1 except in the mixture sweep
  double rank_weight = 1.0;    // rho
  double consist_weight = 1.0; // gamma
  RankConfig rank;
  std::size_t batch_size = 64;
  std::size_t epochs = 20;
  std::uint64_t seed = 1;
  AdamConfig adam;
  ScoreMode score_mode = ScoreMode::kEnrichment;

  void validate() const;
};

// Raw per-batch loss components; the weighted combination
//   zip_weight * zip + rho * (beta * psr + (1-beta) * lgr) + gamma * consistency
// recombines to total within bookkeeping tolerance.
struct LossBreakdown {
  double zip = 0.0;
  double psr = 0.0;
  double listmle = 0.0;
  double contrastive = 0.0;
  double lgr = 0.0;          // listmle + sigma_w * contrastive
  double consistency = 0.0;
  double rank = 0.0;         // beta * psr + (1-beta) * lgr
  double total = 0.0;
};

struct RunRecord {
  std::vector<LossBreakdown> epochs;  // per-epoch means over batches
  std::uint64_t seed = 0;
  std::string config_hash;
  double wall_seconds = 0.0;
};

struct TotalLossResult {
  Var total;
  LossBreakdown parts;
};

// One batch of the full objective. The rank loss reads the enrichment head
// against observed target counts; top_k is clamped to the batch size.
TotalLossResult total_loss(Tape& tape, const ParamStore& store, const ModelConfig& mcfg,
                           const TrainConfig& tcfg, const Dataset& ds,
                           const std::vector<std::size_t>& batch);

struct TrainResult {
  ParamStore params;
  RunRecord record;
};

// Seeded mini-batch training. Shuffles per epoch, drops a trailing batch
// smaller than 2 records, and aborts with the offending component named if
// any loss term goes non-finite.
TrainResult train(const Dataset& ds, const TrainConfig& tcfg, ModelConfig mcfg);

// Mean per-record ZIP NLL of a dataset under trained parameters.
double dataset_zip_nll(const ParamStore& params, const ModelConfig& cfg, const Dataset& ds,
                       std::size_t batch_size = 256);

struct AlphaSweepPoint {
  double alpha = 0.0;
  double heldout_zip_nll = 0.0;
  double spearman_vs_ki = 0.0;
};

// Trains (1-alpha) * zip + alpha * rho * rank (consistency off) for each grid
// point and reports held-out ZIP NLL plus score/Ki Spearman on the eval set.
std::vector<AlphaSweepPoint> alpha_sweep(const Dataset& train_ds, const Dataset& eval_ds,
                                         const TrainConfig& base, const ModelConfig& mcfg,
                                         const std::vector<double>& grid);

// Canonical fingerprint of one training setup, recorded in manifests.
std::string config_fingerprint(const ModelConfig& mcfg, const TrainConfig& tcfg);

}  // namespace delrank

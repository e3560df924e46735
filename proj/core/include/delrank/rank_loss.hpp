#pragma once

#include <cstddef>
#include <vector>

#include "delrank/tape.hpp"

namespace delrank {

struct RankConfig {
  double beta = 0.5;         // pairwise/listwise mix
  double temperature = 0.8;  // T
  double tau = 1e-3;         // contrastive margin
  double sigma_w = 1e-3;     // contrastive weight
  std::size_t top_k = 32;    // K of the normalizer
  double eps = 1e-8;

  // batch_size = 0 skips the K <= N check (config-time validation).
  void validate(std::size_t batch_size = 0) const;
};

// sigmoid((pred_i - pred_j) / T). The comparator is signed and reads the
// predicted counts; the absolute-difference variant cancels identically (see
// the regression test in the suite) so this loss would otherwise be zero.
double soft_sigma(double pred_i, double pred_j, double temperature);

// Indices sorted by descending score, ties broken by input index.
std::vector<std::size_t> rank_order(const std::vector<double>& scores);

// Permutation sorting true counts descending, ties broken by input index.
std::vector<std::size_t> true_order_permutation(const std::vector<double>& truth);

// Pairwise soft-rank loss. Gains come from the true counts, discounts and
// the top-K normalizer from the predicted order; rank positions are
// constants of the forward pass, so gradients flow only through the
// comparator and the normalizer.
Var psr_loss(Var pred, const std::vector<double>& truth, const RankConfig& cfg);

// Negative log-likelihood of the given permutation under the Plackett-Luce
// model at temperature T, computed with suffix log-sum-exp.
Var listmle_term(Var pred, const std::vector<std::size_t>& perm, double temperature);

// max(0, tau - (pred_i - pred_j)) for one admitted ordered pair.
Var contrastive_loss(Var pred_i, Var pred_j, double tau);

// listmle_term over the true ordering plus sigma_w times the contrastive
// hinge summed over ordered pairs whose true counts strictly order them.
Var lgr_loss(Var pred, const std::vector<double>& truth, const RankConfig& cfg);

// beta * PSR + (1 - beta) * LGR.
Var rank_loss(Var pred, const std::vector<double>& truth, const RankConfig& cfg);

}  // namespace delrank

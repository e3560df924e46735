#pragma once

#include <string>
#include <vector>

#include "delrank/param_store.hpp"
#include "delrank/tape.hpp"

namespace delrank {

// The two global excess-zero probabilities, trained as logits so the sigmoid
// keeps them inside (0, 1). Per-compound Poisson means come from the model
// heads, not from here.
struct ZipParams {
  static constexpr const char* kPiMatrixLogit = "zip.pi_matrix_logit";
  static constexpr const char* kPiTargetLogit = "zip.pi_target_logit";

  // Registers both logits; initial pi values must lie in (0, 1).
  static void init(ParamStore& store, double pi_matrix_init = 0.5, double pi_target_init = 0.5);
};

// log P(count | lambda, pi) of the zero-inflated Poisson. lambda is clamped
// at 1e-8 from below; pi in [0, 1). The zero branch goes through a
// log-sum-exp so pi near 0 or 1 stays exact.
double zip_log_pmf(long count, double lambda, double pi);

// Joint negative log-likelihood of a batch: matrix counts against the matrix
// mean, target counts against the matrix + enrichment mean. Vectors must all
// have the batch length.
Var zip_nll_batch(const std::vector<long>& matrix_counts, const std::vector<long>& target_counts,
                  Var lambda_matrix, Var lambda_enrich, Var pi_matrix_logit, Var pi_target_logit);

}  // namespace delrank

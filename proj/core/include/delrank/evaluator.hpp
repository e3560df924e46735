#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "delrank/arc_model.hpp"
#include "delrank/data.hpp"
#include "delrank/param_store.hpp"

namespace delrank {

struct TopKReport {
  std::size_t k = 0;
  double fraction_active = 0.0;
  std::array<double, 3> ki_quartiles{};  // 25th / 50th / 75th percentile of Ki
};

struct EvalReport {
  double spearman_overall = 0.0;
  double spearman_subset = 0.0;  // NaN when the masked subset is degenerate
  bool subset_defined = false;
  TopKReport top_k;
  std::size_t n_eval = 0;
  double mask_lo = 10.0;
  double mask_hi = 90.0;
  std::size_t mask_count = 0;
};

// Spearman rank correlation with midrank tie handling (Pearson correlation
// of average ranks). Equals the classic 1 - 6*sum(d^2)/(n(n^2-1)) form on
// tie-free inputs. Throws on length < 2 or a constant input vector.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// Full report: overall and 10-90 mw-percentile subset correlation of scores
// against Ki, plus the top-k selection summary. Every eval record must carry
// a Ki value and k must not exceed the eval size.
EvalReport evaluate(const Dataset& eval_ds, const std::vector<double>& scores,
                    const Dataset& train_ds, std::size_t k);

// Score a foreign dataset with trained parameters and evaluate it without
// retraining; percentile masking still refers to the original training set.
EvalReport zero_shot_eval(const ParamStore& params, const ModelConfig& cfg, ScoreMode mode,
                          const Dataset& eval_ds, const Dataset& train_ds, std::size_t k,
                          std::size_t n_threads = 1);

std::string eval_report_json(const EvalReport& report);

// CSV of (id, score, ki, rank) sorted by descending score, id tiebreak.
void write_rankings_csv(const std::string& path, const Dataset& ds,
                        const std::vector<double>& scores);

}  // namespace delrank

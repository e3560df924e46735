#include "delrank/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace delrank {

namespace {

// Average ranks, 1-based, ties share the mean of their positions.
std::vector<double> midranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&values](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

bool is_constant(const std::vector<double>& v) {
  for (double x : v) {
    if (x != v[0]) return false;
  }
  return true;
}

// Descending score with ascending id as the tiebreak.
std::vector<std::size_t> score_order(const Dataset& ds, const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ds.records[a].id < ds.records[b].id;
  });
  return order;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("spearman: need at least two samples");
  if (is_constant(x)) throw std::invalid_argument("spearman: first argument is constant");
  if (is_constant(y)) throw std::invalid_argument("spearman: second argument is constant");
  return pearson(midranks(x), midranks(y));
}

EvalReport evaluate(const Dataset& eval_ds, const std::vector<double>& scores,
                    const Dataset& train_ds, std::size_t k) {
  eval_ds.validate();
  if (scores.size() != eval_ds.size()) throw std::invalid_argument("evaluate: score length mismatch");
  if (k == 0 || k > eval_ds.size()) throw std::invalid_argument("evaluate: k must lie in [1, n_eval]");

  std::vector<double> ki;
  ki.reserve(eval_ds.size());
  for (const auto& r : eval_ds.records) {
    if (!r.ki.has_value()) {
      throw std::invalid_argument("evaluate: record '" + r.id + "' has no ki value");
    }
    ki.push_back(*r.ki);
  }

  EvalReport report;
  report.n_eval = eval_ds.size();
  report.top_k.k = k;
  report.spearman_overall = spearman(scores, ki);

  const std::vector<bool> mask = mw_percentile_mask(train_ds, eval_ds, report.mask_lo, report.mask_hi);
  std::vector<double> sub_scores, sub_ki;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      sub_scores.push_back(scores[i]);
      sub_ki.push_back(ki[i]);
    }
  }
  report.mask_count = sub_scores.size();
  if (sub_scores.size() >= 2 && !is_constant(sub_scores) && !is_constant(sub_ki)) {
    report.spearman_subset = spearman(sub_scores, sub_ki);
    report.subset_defined = true;
  } else {
    report.spearman_subset = std::numeric_limits<double>::quiet_NaN();
    report.subset_defined = false;
  }

  const std::vector<std::size_t> order = score_order(eval_ds, scores);
  std::size_t active = 0;
  std::vector<double> top_ki;
  top_ki.reserve(k);
  for (std::size_t pos = 0; pos < k; ++pos) {
    const CompoundRecord& r = eval_ds.records[order[pos]];
    active += static_cast<std::size_t>(r.activity);
    top_ki.push_back(*r.ki);
  }
  report.top_k.fraction_active = static_cast<double>(active) / static_cast<double>(k);
  report.top_k.ki_quartiles = {percentile(top_ki, 25.0), percentile(top_ki, 50.0),
                               percentile(top_ki, 75.0)};
  return report;
}

EvalReport zero_shot_eval(const ParamStore& params, const ModelConfig& cfg, ScoreMode mode,
                          const Dataset& eval_ds, const Dataset& train_ds, std::size_t k,
                          std::size_t n_threads) {
  if (eval_ds.fingerprint_bits != cfg.fingerprint_bits || eval_ds.pose_dim != cfg.pose_dim) {
    throw std::invalid_argument("zero_shot_eval: dataset dimensions do not match the model");
  }
  const std::vector<double> scores = score_records(params, cfg, eval_ds, mode, n_threads);
  return evaluate(eval_ds, scores, train_ds, k);
}

std::string eval_report_json(const EvalReport& report) {
  nlohmann::json j;
  j["n_eval"] = report.n_eval;
  j["spearman_overall"] = report.spearman_overall;
  if (report.subset_defined) {
    j["spearman_subset"] = report.spearman_subset;
  } else {
    j["spearman_subset"] = nullptr;
  }
  j["mask"] = {{"lo", report.mask_lo}, {"hi", report.mask_hi}, {"count", report.mask_count}};
  j["top_k"] = {{"k", report.top_k.k},
                {"fraction_active", report.top_k.fraction_active},
                {"ki_quartiles", report.top_k.ki_quartiles}};
  return j.dump(2);
}

void write_rankings_csv(const std::string& path, const Dataset& ds,
                        const std::vector<double>& scores) {
  if (scores.size() != ds.size()) throw std::invalid_argument("write_rankings_csv: length mismatch");
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("write_rankings_csv: cannot open '" + path + "'");
  os << "id,score,ki,rank\n";
  const std::vector<std::size_t> order = score_order(ds, scores);
  os.precision(17);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const CompoundRecord& r = ds.records[order[pos]];
    os << r.id << ',' << scores[order[pos]] << ',';
    if (r.ki.has_value()) os << *r.ki;
    os << ',' << (pos + 1) << '\n';
  }
  if (!os) throw std::runtime_error("write_rankings_csv: write failed for '" + path + "'");
}

}  // namespace delrank

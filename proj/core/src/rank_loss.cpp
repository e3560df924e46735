#include "delrank/rank_loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace delrank {

namespace {

double plain_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double log2_discount(std::size_t rank_1based, double eps) {
  return 1.0 / (std::log2(static_cast<double>(rank_1based) + 1.0) + eps);
}

void check_perm(const std::vector<std::size_t>& perm, std::size_t n) {
  if (perm.size() != n) throw std::invalid_argument("listmle_term: permutation length mismatch");
  std::vector<bool> seen(n, false);
  for (std::size_t p : perm) {
    if (p >= n || seen[p]) throw std::invalid_argument("listmle_term: not a permutation");
    seen[p] = true;
  }
}

}  // namespace

void RankConfig::validate(std::size_t batch_size) const {
  if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("rank config: beta must lie in [0, 1]");
  if (!(temperature > 0.0)) throw std::invalid_argument("rank config: temperature must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("rank config: tau must be positive");
  if (sigma_w < 0.0) throw std::invalid_argument("rank config: sigma_w must be non-negative");
  if (top_k == 0) throw std::invalid_argument("rank config: top_k must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("rank config: eps must be positive");
  if (batch_size != 0 && top_k > batch_size) {
    throw std::invalid_argument("rank config: top_k exceeds batch size");
  }
}

double soft_sigma(double pred_i, double pred_j, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("soft_sigma: temperature must be positive");
  const double x = (pred_i - pred_j) / temperature;
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<std::size_t> rank_order(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

std::vector<std::size_t> true_order_permutation(const std::vector<double>& truth) {
  return rank_order(truth);
}

Var psr_loss(Var pred, const std::vector<double>& truth, const RankConfig& cfg) {
  const std::size_t n = truth.size();
  if (n < 2) throw std::invalid_argument("psr_loss: need at least two compounds");
  if (pred.value().numel() != n) throw std::invalid_argument("psr_loss: length mismatch");
  cfg.validate(n);
  Tape& tape = *pred.tape;

  const std::vector<double> pred_values(pred.value().data(), pred.value().data() + n);
  const std::vector<std::size_t> order = rank_order(pred_values);
  std::vector<std::size_t> rank(n);  // 1-based predicted rank per input index
  for (std::size_t pos = 0; pos < n; ++pos) rank[order[pos]] = pos + 1;

  // Constant pair weights (G_i - G_j)(D_i - D_j); gains from true counts,
  // discounts from the predicted positions.
  std::vector<double> gain(n), disc(n);
  for (std::size_t i = 0; i < n; ++i) {
    gain[i] = plain_softplus(truth[i]);
    disc[i] = log2_discount(rank[i], cfg.eps);
  }
  Tensor weights = Tensor::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      weights.at(i, j) = (gain[i] - gain[j]) * (disc[i] - disc[j]);
    }
  }

  const Var sig = sigmoid(scale(outer_diff(pred), 1.0 / cfg.temperature));
  const Var asym = sub(sig, transpose(sig));  // sigma_ij - sigma_ji
  const Var row_sums = matmul(mul(tape.constant(std::move(weights)), asym),
                              tape.constant(Tensor::full({n}, 1.0)));
  const Var raw = sum(mul(pred, row_sums));

  // Top-K normalizer on the predicted values.
  std::vector<std::size_t> topk(order.begin(), order.begin() + static_cast<long>(cfg.top_k));
  std::vector<double> topk_disc(cfg.top_k);
  for (std::size_t k = 0; k < cfg.top_k; ++k) topk_disc[k] = log2_discount(k + 1, cfg.eps);
  const Var z = sum(mul(softplus(select(pred, topk)), tape.constant_vector(std::move(topk_disc))));

  return scale(div(raw, z), -1.0);
}

Var listmle_term(Var pred, const std::vector<std::size_t>& perm, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("listmle_term: temperature must be positive");
  const std::size_t n = pred.value().numel();
  check_perm(perm, n);
  const Var scores = scale(select(pred, perm), 1.0 / temperature);
  return sum(sub(suffix_logsumexp(scores), scores));
}

Var contrastive_loss(Var pred_i, Var pred_j, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("contrastive_loss: tau must be positive");
  Tape& tape = *pred_i.tape;
  return relu(sub(tape.constant_scalar(tau), sub(pred_i, pred_j)));
}

Var lgr_loss(Var pred, const std::vector<double>& truth, const RankConfig& cfg) {
  const std::size_t n = truth.size();
  if (n < 2) throw std::invalid_argument("lgr_loss: need at least two compounds");
  if (pred.value().numel() != n) throw std::invalid_argument("lgr_loss: length mismatch");
  cfg.validate(n);
  Tape& tape = *pred.tape;

  const Var listwise = listmle_term(pred, true_order_permutation(truth), cfg.temperature);
  if (cfg.sigma_w == 0.0) return listwise;

  // Admitted ordered pairs: true count of i strictly above j; ties excluded.
  Tensor mask = Tensor::zeros({n, n});
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (truth[i] > truth[j]) {
        mask.at(i, j) = 1.0;
        any = true;
      }
    }
  }
  if (!any) return listwise;

  const Var margins = relu(sub(tape.constant(Tensor::full({n, n}, cfg.tau)), outer_diff(pred)));
  const Var hinge_sum = sum(mul(tape.constant(std::move(mask)), margins));
  return add(listwise, scale(hinge_sum, cfg.sigma_w));
}

Var rank_loss(Var pred, const std::vector<double>& truth, const RankConfig& cfg) {
  cfg.validate(truth.size());
  const Var pairwise = psr_loss(pred, truth, cfg);
  const Var listwise = lgr_loss(pred, truth, cfg);
  return add(scale(pairwise, cfg.beta), scale(listwise, 1.0 - cfg.beta));
}

}  // namespace delrank

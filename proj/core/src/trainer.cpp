#include "delrank/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "delrank/hash.hpp"
#include "delrank/logging.hpp"
#include "delrank/rng.hpp"
#include "delrank/evaluator.hpp"
#include "delrank/zip_loss.hpp"

namespace delrank {

namespace {

void gather_counts(const Dataset& ds, const std::vector<std::size_t>& batch,
                   std::vector<long>& matrix, std::vector<long>& target,
                   std::vector<double>& target_real, std::vector<int>& labels) {
  matrix.clear();
  target.clear();
  target_real.clear();
  labels.clear();
  for (std::size_t idx : batch) {
    const CompoundRecord& r = ds.records[idx];
    matrix.push_back(r.matrix_count);
    target.push_back(r.target_count);
    target_real.push_back(static_cast<double>(r.target_count));
    labels.push_back(r.activity);
  }
}

void check_finite(const LossBreakdown& parts, std::size_t epoch, std::size_t batch_no) {
  const struct {
    const char* name;
    double value;
  } components[] = {{"zip", parts.zip},           {"psr", parts.psr},
                    {"listmle", parts.listmle},   {"contrastive", parts.contrastive},
                    {"consistency", parts.consistency}, {"total", parts.total}};
  for (const auto& c : components) {
    if (!std::isfinite(c.value)) {
      std::ostringstream msg;
      msg << "training aborted: loss component '" << c.name << "' is non-finite at epoch "
          << epoch << ", batch " << batch_no;
      throw std::runtime_error(msg.str());
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (zip_weight < 0.0) throw std::invalid_argument("train config: zip_weight must be non-negative");
  if (rank_weight < 0.0) throw std::invalid_argument("train config: rank_weight must be non-negative");
  if (consist_weight < 0.0) throw std::invalid_argument("train config: consist_weight must be non-negative");
  if (batch_size < 2) throw std::invalid_argument("train config: batch_size must be at least 2");
  if (epochs == 0) throw std::invalid_argument("train config: epochs must be positive");
  if (!(adam.lr >= 0.0)) throw std::invalid_argument("train config: learning rate must be non-negative");
  rank.validate();
}

TotalLossResult total_loss(Tape& tape, const ParamStore& store, const ModelConfig& mcfg,
                           const TrainConfig& tcfg, const Dataset& ds,
                           const std::vector<std::size_t>& batch) {
  if (batch.empty()) throw std::invalid_argument("total_loss: empty batch");
  const std::size_t n = batch.size();

  std::vector<long> matrix_counts, target_counts;
  std::vector<double> target_real;
  std::vector<int> labels;
  gather_counts(ds, batch, matrix_counts, target_counts, target_real, labels);

  const BatchOutputs out = model_forward(tape, store, mcfg, ds, batch);
  const Var pi_matrix = tape.param(store, ZipParams::kPiMatrixLogit);
  const Var pi_target = tape.param(store, ZipParams::kPiTargetLogit);

  const Var zip = zip_nll_batch(matrix_counts, target_counts, out.lambda_matrix,
                                out.lambda_enrich, pi_matrix, pi_target);

  RankConfig rank_cfg = tcfg.rank;
  rank_cfg.top_k = std::min(rank_cfg.top_k, n);

  LossBreakdown parts;
  parts.zip = zip.item();

  Var total = scale(zip, tcfg.zip_weight);
  if (n >= 2) {
    const Var psr = psr_loss(out.lambda_enrich, target_real, rank_cfg);
    const Var lgr = lgr_loss(out.lambda_enrich, target_real, rank_cfg);
    const Var rank = add(scale(psr, rank_cfg.beta), scale(lgr, 1.0 - rank_cfg.beta));
    parts.psr = psr.item();
    parts.lgr = lgr.item();
    parts.listmle =
        listmle_term(out.lambda_enrich, true_order_permutation(target_real), rank_cfg.temperature)
            .item();
    parts.contrastive =
        rank_cfg.sigma_w > 0.0 ? (parts.lgr - parts.listmle) / rank_cfg.sigma_w : 0.0;
    parts.rank = rank.item();
    if (tcfg.rank_weight > 0.0) total = add(total, scale(rank, tcfg.rank_weight));
  }

  const Var consist = consistency_loss(target_real, out.lambda_enrich, labels, out.activity);
  parts.consistency = consist.item();
  if (tcfg.consist_weight > 0.0) total = add(total, scale(consist, tcfg.consist_weight));

  parts.total = total.item();
  return {total, parts};
}

TrainResult train(const Dataset& ds, const TrainConfig& tcfg, ModelConfig mcfg) {
  ds.validate();
  tcfg.validate();
  if (mcfg.fingerprint_bits == 0) mcfg.fingerprint_bits = ds.fingerprint_bits;
  if (mcfg.pose_dim == 0) mcfg.pose_dim = ds.pose_dim;
  mcfg.validate();
  if (mcfg.fingerprint_bits != ds.fingerprint_bits || mcfg.pose_dim != ds.pose_dim) {
    throw std::invalid_argument("train: dataset dimensions do not match the model config");
  }

  const auto start = std::chrono::steady_clock::now();

  ParamStore params;
  init_model_params(params, mcfg, tcfg.seed);
  ZipParams::init(params);
  AdamState adam(tcfg.adam);

  RunRecord record;
  record.seed = tcfg.seed;
  record.config_hash = config_fingerprint(mcfg, tcfg);

  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < tcfg.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(tcfg.seed, epoch));
    shuffle_rng.shuffle(order);

    LossBreakdown epoch_sum;
    std::size_t n_batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += tcfg.batch_size) {
      const std::size_t end = std::min(begin + tcfg.batch_size, order.size());
      if (end - begin < 2) break;  // ranking losses need pairs
      const std::vector<std::size_t> batch(order.begin() + static_cast<long>(begin),
                                           order.begin() + static_cast<long>(end));
      Tape tape;
      TotalLossResult result = total_loss(tape, params, mcfg, tcfg, ds, batch);
      check_finite(result.parts, epoch, n_batches);
      const GradMap grads = tape.backward(result.total, params);
      adam.step(params, grads);

      epoch_sum.zip += result.parts.zip;
      epoch_sum.psr += result.parts.psr;
      epoch_sum.listmle += result.parts.listmle;
      epoch_sum.contrastive += result.parts.contrastive;
      epoch_sum.lgr += result.parts.lgr;
      epoch_sum.consistency += result.parts.consistency;
      epoch_sum.rank += result.parts.rank;
      epoch_sum.total += result.parts.total;
      ++n_batches;
    }
    if (n_batches == 0) throw std::runtime_error("train: dataset yields no usable batch");
    const double inv = 1.0 / static_cast<double>(n_batches);
    LossBreakdown mean = epoch_sum;
    mean.zip *= inv;
    mean.psr *= inv;
    mean.listmle *= inv;
    mean.contrastive *= inv;
    mean.lgr *= inv;
    mean.consistency *= inv;
    mean.rank *= inv;
    mean.total *= inv;
    record.epochs.push_back(mean);
    log_info("epoch %zu/%zu: total %.4f (zip %.4f, rank %.6g, consist %.4f)", epoch + 1,
             tcfg.epochs, mean.total, mean.zip, mean.rank, mean.consistency);
  }

  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(params), std::move(record)};
}

double dataset_zip_nll(const ParamStore& params, const ModelConfig& cfg, const Dataset& ds,
                       std::size_t batch_size) {
  ds.validate();
  double total = 0.0;
  for (std::size_t begin = 0; begin < ds.size(); begin += batch_size) {
    const std::size_t end = std::min(begin + batch_size, ds.size());
    std::vector<std::size_t> batch(end - begin);
    for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = begin + i;

    std::vector<long> matrix_counts, target_counts;
    std::vector<double> target_real;
    std::vector<int> labels;
    gather_counts(ds, batch, matrix_counts, target_counts, target_real, labels);

    Tape tape;
    const BatchOutputs out = model_forward(tape, params, cfg, ds, batch);
    const Var zip = zip_nll_batch(matrix_counts, target_counts, out.lambda_matrix,
                                  out.lambda_enrich, tape.param(params, ZipParams::kPiMatrixLogit),
                                  tape.param(params, ZipParams::kPiTargetLogit));
    total += zip.item();
  }
  return total / static_cast<double>(ds.size());
}

std::vector<AlphaSweepPoint> alpha_sweep(const Dataset& train_ds, const Dataset& eval_ds,
                                         const TrainConfig& base, const ModelConfig& mcfg,
                                         const std::vector<double>& grid) {
  std::vector<AlphaSweepPoint> points;
  std::vector<double> ki;
  for (const auto& r : eval_ds.records) {
    if (!r.ki.has_value()) throw std::invalid_argument("alpha_sweep: eval record without ki");
    ki.push_back(*r.ki);
  }
  for (const double alpha : grid) {
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("alpha_sweep: alpha outside [0, 1]");
    TrainConfig cfg = base;
    cfg.zip_weight = 1.0 - alpha;
    cfg.rank_weight = alpha * base.rank_weight;
    cfg.consist_weight = 0.0;
    log_info("alpha sweep: training alpha = %.2f", alpha);
    TrainResult result = train(train_ds, cfg, mcfg);
    AlphaSweepPoint p;
    p.alpha = alpha;
    p.heldout_zip_nll = dataset_zip_nll(result.params, mcfg, eval_ds);
    const std::vector<double> scores =
        score_records(result.params, mcfg, eval_ds, base.score_mode);
    p.spearman_vs_ki = spearman(scores, ki);
    points.push_back(p);
  }
  return points;
}

std::string config_fingerprint(const ModelConfig& mcfg, const TrainConfig& tcfg) {
  std::ostringstream os;
  os.precision(17);
  os << "d=" << mcfg.fingerprint_bits << ";m=" << mcfg.pose_dim << ";hidden=" << mcfg.hidden
     << ";varsigma=" << mcfg.varsigma << ";n_iters=" << mcfg.n_iters
     << ";feedback=" << mcfg.use_feedback << ";zip_w=" << tcfg.zip_weight
     << ";rho=" << tcfg.rank_weight << ";gamma=" << tcfg.consist_weight
     << ";beta=" << tcfg.rank.beta << ";T=" << tcfg.rank.temperature << ";tau=" << tcfg.rank.tau
     << ";sigma_w=" << tcfg.rank.sigma_w << ";K=" << tcfg.rank.top_k << ";eps=" << tcfg.rank.eps
     << ";batch=" << tcfg.batch_size << ";epochs=" << tcfg.epochs << ";seed=" << tcfg.seed
     << ";lr=" << tcfg.adam.lr << ";b1=" << tcfg.adam.b1 << ";b2=" << tcfg.adam.b2
     << ";adam_eps=" << tcfg.adam.eps << ";score=" << to_string(tcfg.score_mode);
  return fnv1a64_hex(os.str());
}

}  // namespace delrank

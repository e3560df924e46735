#include "delrank/arc_model.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

#include "delrank/rng.hpp"

namespace delrank {

namespace {

// Parameter names. Weights are stored (in x out) so the batched path is a
// plain matmul without transposes.
constexpr const char* kFpW1 = "enc.fp.w1";
constexpr const char* kFpB1 = "enc.fp.b1";
constexpr const char* kFpW2 = "enc.fp.w2";
constexpr const char* kFpB2 = "enc.fp.b2";
constexpr const char* kPoseW1 = "enc.pose.w1";
constexpr const char* kPoseB1 = "enc.pose.b1";
constexpr const char* kPoseW2 = "enc.pose.w2";
constexpr const char* kPoseB2 = "enc.pose.b2";
constexpr const char* kPostW = "fuse.post.w";
constexpr const char* kPostB = "fuse.post.b";
constexpr const char* kMatrixW = "head.matrix.w";
constexpr const char* kMatrixB = "head.matrix.b";
constexpr const char* kReadW = "head.read.w";
constexpr const char* kReadB = "head.read.b";
constexpr const char* kEnrichW = "head.enrich.w";
constexpr const char* kEnrichB = "head.enrich.b";
constexpr const char* kActW = "head.act.w";
constexpr const char* kActB = "head.act.b";

Tensor uniform_init(Rng& rng, std::vector<std::size_t> shape, std::size_t fan_in) {
  Tensor t = Tensor::zeros(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

// X (n x in) -> relu(X W + b) (n x hidden).
Var affine_relu(Tape& tape, const ParamStore& store, Var x, const char* w, const char* b) {
  return relu(add_rowvec(matmul(x, tape.param(store, w)), tape.param(store, b)));
}

// X (n x in) * w (in) + b -> (n).
Var head(Tape& tape, const ParamStore& store, Var x, const char* w, const char* b) {
  return add(matmul(x, tape.param(store, w)), tape.param(store, b));
}

Tensor fingerprint_matrix(const Dataset& ds, const std::vector<std::size_t>& batch) {
  const std::size_t d = ds.fingerprint_bits;
  Tensor x = Tensor::zeros({batch.size(), d});
  for (std::size_t row = 0; row < batch.size(); ++row) {
    const CompoundRecord& r = ds.records[batch[row]];
    double* dst = x.data() + row * d;
    for (std::size_t bit = 0; bit < d; ++bit) dst[bit] = r.fingerprint_bit(bit) ? 1.0 : 0.0;
  }
  return x;
}

Tensor pose_matrix(const CompoundRecord& r, std::size_t m) {
  Tensor x = Tensor::zeros({r.poses.size(), m});
  for (std::size_t p = 0; p < r.poses.size(); ++p) {
    std::copy(r.poses[p].begin(), r.poses[p].end(), x.data() + p * m);
  }
  return x;
}

struct RefineOut {
  Var lambda_matrix;
  Var lambda_enrich;
  Var activity;
};

// Shared batched refinement: h_f and h_p are (n x hidden).
RefineOut refine(Tape& tape, const ParamStore& store, const ModelConfig& cfg, Var h_f, Var h_p) {
  const std::size_t n = h_f.value().rows();
  const Var fused = cfg.varsigma == 0.0 ? h_f : add(scale(h_p, cfg.varsigma), h_f);
  const Var x = affine_relu(tape, store, fused, kPostW, kPostB);

  const Var lambda_matrix = softplus(head(tape, store, h_f, kMatrixW, kMatrixB));

  Var r_hat = tape.constant(Tensor::zeros({n}));
  Var p_hat = tape.constant(Tensor::zeros({n}));
  const Var zeros = tape.constant(Tensor::zeros({n}));
  for (std::size_t it = 0; it < cfg.n_iters; ++it) {
    // Jacobi update: both heads read the values from the iteration start.
    const Var read_in = concat(x, cfg.use_feedback ? p_hat : zeros);
    const Var act_in = concat(x, cfg.use_feedback ? r_hat : zeros);
    const Var read_hidden = affine_relu(tape, store, read_in, kReadW, kReadB);
    const Var r_next = softplus(head(tape, store, read_hidden, kEnrichW, kEnrichB));
    const Var p_next = sigmoid(head(tape, store, act_in, kActW, kActB));
    r_hat = r_next;
    p_hat = p_next;
  }
  return {lambda_matrix, r_hat, p_hat};
}

}  // namespace

void ModelConfig::validate() const {
  if (fingerprint_bits == 0 || fingerprint_bits % 8 != 0) {
    throw std::invalid_argument("model config: fingerprint_bits must be a positive multiple of 8");
  }
  if (pose_dim == 0) throw std::invalid_argument("model config: pose_dim must be positive");
  if (hidden == 0) throw std::invalid_argument("model config: hidden must be positive");
  if (varsigma < 0.0) throw std::invalid_argument("model config: varsigma must be non-negative");
  if (n_iters == 0) throw std::invalid_argument("model config: n_iters must be positive");
}

ScoreMode score_mode_from_string(const std::string& s) {
  if (s == "enrichment") return ScoreMode::kEnrichment;
  if (s == "target_mean") return ScoreMode::kTargetMean;
  throw std::invalid_argument("unknown score mode '" + s + "' (expected enrichment|target_mean)");
}

std::string to_string(ScoreMode mode) {
  return mode == ScoreMode::kEnrichment ? "enrichment" : "target_mean";
}

void init_model_params(ParamStore& store, const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const std::size_t d = cfg.fingerprint_bits;
  const std::size_t m = cfg.pose_dim;
  const std::size_t h = cfg.hidden;
  store.add(kFpW1, uniform_init(rng, {d, h}, d));
  store.add(kFpB1, uniform_init(rng, {h}, d));
  store.add(kFpW2, uniform_init(rng, {h, h}, h));
  store.add(kFpB2, uniform_init(rng, {h}, h));
  store.add(kPoseW1, uniform_init(rng, {m, h}, m));
  store.add(kPoseB1, uniform_init(rng, {h}, m));
  store.add(kPoseW2, uniform_init(rng, {h, h}, h));
  store.add(kPoseB2, uniform_init(rng, {h}, h));
  store.add(kPostW, uniform_init(rng, {h, h}, h));
  store.add(kPostB, uniform_init(rng, {h}, h));
  store.add(kMatrixW, uniform_init(rng, {h}, h));
  store.add(kMatrixB, uniform_init(rng, std::vector<std::size_t>{}, h));
  store.add(kReadW, uniform_init(rng, {h + 1, h}, h + 1));
  store.add(kReadB, uniform_init(rng, {h}, h + 1));
  store.add(kEnrichW, uniform_init(rng, {h}, h));
  store.add(kEnrichB, uniform_init(rng, std::vector<std::size_t>{}, h));
  store.add(kActW, uniform_init(rng, {h + 1}, h + 1));
  store.add(kActB, uniform_init(rng, std::vector<std::size_t>{}, h + 1));
}

std::pair<Var, Var> encode(Tape& tape, const ParamStore& store, const ModelConfig& cfg,
                           const CompoundRecord& record) {
  cfg.validate();
  if (record.fingerprint.size() * 8 != cfg.fingerprint_bits) {
    throw std::invalid_argument("encode: fingerprint length mismatch");
  }
  if (record.poses.empty() || record.poses[0].size() != cfg.pose_dim) {
    throw std::invalid_argument("encode: pose dimension mismatch");
  }

  Tensor fp = Tensor::zeros({1, cfg.fingerprint_bits});
  for (std::size_t bit = 0; bit < cfg.fingerprint_bits; ++bit) {
    fp.data()[bit] = record.fingerprint_bit(bit) ? 1.0 : 0.0;
  }
  Var h_f = affine_relu(tape, store,
                        affine_relu(tape, store, tape.constant(std::move(fp)), kFpW1, kFpB1),
                        kFpW2, kFpB2);

  Var poses = tape.constant(pose_matrix(record, cfg.pose_dim));
  Var h_p = mean_pool(
      affine_relu(tape, store, affine_relu(tape, store, poses, kPoseW1, kPoseB1), kPoseW2, kPoseB2),
      0);

  // h_f is a 1 x hidden matrix; flatten to match the pooled pose embedding.
  return {mean_pool(h_f, 0), h_p};
}

std::tuple<Var, Var, Var> arc_refine(Tape& tape, const ParamStore& store, const ModelConfig& cfg,
                                     Var h_f, Var h_p) {
  cfg.validate();
  if (h_f.value().numel() != cfg.hidden || h_p.value().numel() != cfg.hidden) {
    throw std::invalid_argument("arc_refine: embedding size mismatch");
  }
  const Var h_f_row = reshape(h_f, {1, cfg.hidden});
  const Var h_p_row = reshape(h_p, {1, cfg.hidden});
  RefineOut out = refine(tape, store, cfg, h_f_row, h_p_row);
  return {reshape(out.lambda_matrix, {}), reshape(out.lambda_enrich, {}),
          reshape(out.activity, {})};
}

BatchOutputs model_forward(Tape& tape, const ParamStore& store, const ModelConfig& cfg,
                           const Dataset& ds, const std::vector<std::size_t>& batch) {
  cfg.validate();
  if (batch.empty()) throw std::invalid_argument("model_forward: empty batch");
  if (ds.fingerprint_bits != cfg.fingerprint_bits || ds.pose_dim != cfg.pose_dim) {
    throw std::invalid_argument("model_forward: dataset dimensions do not match the model");
  }

  const Var fp = tape.constant(fingerprint_matrix(ds, batch));
  const Var h_f =
      affine_relu(tape, store, affine_relu(tape, store, fp, kFpW1, kFpB1), kFpW2, kFpB2);

  std::vector<Var> pooled;
  pooled.reserve(batch.size());
  for (std::size_t idx : batch) {
    const Var poses = tape.constant(pose_matrix(ds.records[idx], cfg.pose_dim));
    const Var enc = affine_relu(
        tape, store, affine_relu(tape, store, poses, kPoseW1, kPoseB1), kPoseW2, kPoseB2);
    pooled.push_back(mean_pool(enc, 0));
  }
  const Var h_p = stack_rows(pooled);

  RefineOut out = refine(tape, store, cfg, h_f, h_p);
  return {out.lambda_matrix, out.lambda_enrich, out.activity};
}

Var consistency_loss(const std::vector<double>& target_counts, Var predicted_counts,
                     const std::vector<int>& labels, Var predicted_activity) {
  const std::size_t n = target_counts.size();
  if (labels.size() != n || predicted_counts.value().numel() != n ||
      predicted_activity.value().numel() != n) {
    throw std::invalid_argument("consistency_loss: length mismatch");
  }
  Tape& tape = *predicted_counts.tape;

  std::vector<double> label_values(n);
  for (std::size_t i = 0; i < n; ++i) label_values[i] = static_cast<double>(labels[i]);
  const Var y = tape.constant_vector(label_values);
  const Var first = sum(abs(sub(predicted_activity, y)));

  // Observed side: constant normalized counts, zero when the batch max is zero.
  double max_count = 0.0;
  for (double c : target_counts) max_count = std::max(max_count, c);
  std::vector<double> observed_sq(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double norm = max_count > 0.0 ? target_counts[i] / max_count : 0.0;
    const double diff = label_values[i] - norm;
    observed_sq[i] = diff * diff;
  }

  // Predicted side: the same guard, decided on the forward value.
  double max_pred = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    max_pred = std::max(max_pred, predicted_counts.value()[i]);
  }
  Var pred_norm = max_pred > 0.0 ? div(predicted_counts, max_reduce(predicted_counts))
                                 : tape.constant(Tensor::zeros({n}));
  const Var pd = sub(predicted_activity, pred_norm);
  const Var second = sum(relu(sub(mul(pd, pd), tape.constant_vector(std::move(observed_sq)))));

  return add(first, second);
}

std::vector<double> score_records(const ParamStore& store, const ModelConfig& cfg,
                                  const Dataset& ds, ScoreMode mode, std::size_t n_threads) {
  cfg.validate();
  const std::size_t n = ds.size();
  std::vector<double> scores(n, 0.0);
  if (n == 0) return scores;

  auto score_span = [&](std::size_t begin, std::size_t end) {
    constexpr std::size_t kChunk = 256;
    for (std::size_t start = begin; start < end; start += kChunk) {
      const std::size_t stop = std::min(start + kChunk, end);
      std::vector<std::size_t> batch(stop - start);
      for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = start + i;
      Tape tape;
      const BatchOutputs out = model_forward(tape, store, cfg, ds, batch);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const double enrich = out.lambda_enrich.value()[i];
        scores[start + i] = mode == ScoreMode::kEnrichment
                                ? enrich
                                : enrich + out.lambda_matrix.value()[i];
      }
    }
  };

  if (n_threads <= 1 || n < 2 * 256) {
    score_span(0, n);
    return scores;
  }
  const std::size_t workers = std::min<std::size_t>(n_threads, 8);
  std::vector<std::thread> pool;
  const std::size_t stride = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * stride;
    const std::size_t end = std::min(begin + stride, n);
    if (begin >= end) break;
    pool.emplace_back(score_span, begin, end);
  }
  for (auto& t : pool) t.join();
  return scores;
}

}  // namespace delrank

// Command-line front end: simulate | train | eval | rank | gradcheck.
// Every command resolves a RunConfig (config file + flag overrides), writes
// its primary output plus a <out>.manifest.json with the config hash and
// seed, and reports failures as machine-readable JSON on stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "delrank/config.hpp"
#include "delrank/data.hpp"
#include "delrank/evaluator.hpp"
#include "delrank/grad_check.hpp"
#include "delrank/logging.hpp"
#include "delrank/rng.hpp"
#include "delrank/trainer.hpp"
#include "delrank/zip_loss.hpp"

namespace {

using delrank::Dataset;
using delrank::ModelConfig;
using delrank::ParamStore;
using delrank::RunConfig;
using nlohmann::json;

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t threads = 1;
};

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg;
  if (!flags.config_path.empty()) cfg = delrank::parse_config_file(flags.config_path);
  if (flags.seed_set) {
    cfg.seed = flags.seed;
    cfg.train.seed = flags.seed;
  }
  if (flags.threads < 1) throw std::invalid_argument("--threads must be at least 1");
  return cfg;
}

void write_manifest(const std::string& out_path, const std::string& command, const RunConfig& cfg,
                    const std::string& extras_json) {
  delrank::write_text_file(out_path + ".manifest.json",
                           delrank::manifest_json(command, cfg, extras_json) + "\n");
}

json loss_breakdown_json(const delrank::LossBreakdown& b) {
  return json{{"zip", b.zip},
              {"psr", b.psr},
              {"listmle", b.listmle},
              {"contrastive", b.contrastive},
              {"lgr", b.lgr},
              {"consistency", b.consistency},
              {"rank", b.rank},
              {"total", b.total}};
}

json model_json(const ModelConfig& m) {
  return json{{"d", m.fingerprint_bits},    {"m", m.pose_dim},
              {"hidden", m.hidden},         {"varsigma", m.varsigma},
              {"n_iters", m.n_iters},       {"use_feedback", m.use_feedback},
              {"pose_pool", "mean"}};
}

ModelConfig model_from_manifest(const std::string& checkpoint_path) {
  const std::string manifest_path = checkpoint_path + ".manifest.json";
  std::ifstream is(manifest_path);
  if (!is) {
    throw std::runtime_error("cannot open checkpoint manifest '" + manifest_path + "'");
  }
  json j;
  is >> j;
  const json& m = j.at("result").at("model");
  ModelConfig cfg;
  cfg.fingerprint_bits = m.at("d").get<std::size_t>();
  cfg.pose_dim = m.at("m").get<std::size_t>();
  cfg.hidden = m.at("hidden").get<std::size_t>();
  cfg.varsigma = m.at("varsigma").get<double>();
  cfg.n_iters = m.at("n_iters").get<std::size_t>();
  cfg.use_feedback = m.at("use_feedback").get<bool>();
  return cfg;
}

delrank::ScoreMode score_mode_from_manifest(const std::string& checkpoint_path) {
  std::ifstream is(checkpoint_path + ".manifest.json");
  json j;
  is >> j;
  return delrank::score_mode_from_string(
      j.at("result").value("score_mode", std::string("enrichment")));
}

double quantile_of_counts(const std::vector<long>& counts, double p) {
  std::vector<double> values(counts.begin(), counts.end());
  return delrank::percentile(values, p);
}

int cmd_simulate(const CommonFlags& flags) {
  RunConfig cfg = resolve_config(flags);
  const std::string out = flags.out.empty() ? "synthetic.jsonl" : flags.out;
  cfg.sim.validate();

  const Dataset ds = delrank::generate_synthetic(cfg.sim, cfg.seed);
  delrank::save_dataset(ds, out);

  std::vector<long> m_counts, r_counts;
  std::size_t m_zeros = 0, r_zeros = 0, active = 0;
  for (const auto& r : ds.records) {
    m_counts.push_back(r.matrix_count);
    r_counts.push_back(r.target_count);
    m_zeros += r.matrix_count == 0 ? 1 : 0;
    r_zeros += r.target_count == 0 ? 1 : 0;
    active += static_cast<std::size_t>(r.activity);
  }
  const double n = static_cast<double>(ds.size());
  json summary = {
      {"n_records", ds.size()},
      {"zero_fraction_matrix", m_zeros / n},
      {"zero_fraction_target", r_zeros / n},
      {"active_fraction", active / n},
      {"matrix_quantiles",
       {quantile_of_counts(m_counts, 50), quantile_of_counts(m_counts, 90),
        quantile_of_counts(m_counts, 99)}},
      {"target_quantiles",
       {quantile_of_counts(r_counts, 50), quantile_of_counts(r_counts, 90),
        quantile_of_counts(r_counts, 99)}},
  };
  std::cout << summary.dump(2) << std::endl;
  write_manifest(out, "simulate", cfg, summary.dump());
  return 0;
}

int cmd_train(const CommonFlags& flags) {
  RunConfig cfg = resolve_config(flags);
  if (cfg.data_train.empty()) throw std::invalid_argument("train: config key 'data.train' is required");
  const std::string out = flags.out.empty() ? "model.ckpt" : flags.out;

  const Dataset ds = delrank::load_dataset(cfg.data_train);
  cfg.model.fingerprint_bits = ds.fingerprint_bits;
  cfg.model.pose_dim = ds.pose_dim;
  cfg.train.validate();
  cfg.model.validate();

  delrank::log_info("training on %zu records (d=%zu, m=%zu)", ds.size(), ds.fingerprint_bits,
                    ds.pose_dim);
  const delrank::TrainResult result = delrank::train(ds, cfg.train, cfg.model);
  delrank::save_checkpoint(result.params, out);

  json epochs = json::array();
  for (const auto& e : result.record.epochs) epochs.push_back(loss_breakdown_json(e));
  const bool baseline = cfg.train.rank_weight == 0.0 && cfg.train.consist_weight == 0.0;
  json extras = {{"model", model_json(cfg.model)},
                 {"score_mode", delrank::to_string(cfg.train.score_mode)},
                 {"data_train", cfg.data_train},
                 {"baseline_zip_only", baseline},
                 {"epochs", epochs},
                 {"final", loss_breakdown_json(result.record.epochs.back())},
                 {"wall_seconds", result.record.wall_seconds},
                 {"train_fingerprint", result.record.config_hash}};
  write_manifest(out, "train", cfg, extras.dump());
  delrank::log_info("checkpoint written to %s", out.c_str());
  return 0;
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint_path,
             const std::string& data_path, std::size_t top_k, bool top_k_set,
             const std::string& zero_shot_path) {
  RunConfig cfg = resolve_config(flags);
  if (cfg.data_train.empty()) {
    throw std::invalid_argument("eval: config key 'data.train' is required for the percentile mask");
  }
  if (top_k_set) cfg.eval_top_k = top_k;
  const std::string out = flags.out.empty() ? "eval_report.json" : flags.out;

  const ParamStore params = delrank::load_checkpoint(checkpoint_path);
  const ModelConfig mcfg = model_from_manifest(checkpoint_path);
  const delrank::ScoreMode mode = score_mode_from_manifest(checkpoint_path);

  const Dataset eval_ds = delrank::load_dataset(data_path);
  if (eval_ds.fingerprint_bits != mcfg.fingerprint_bits || eval_ds.pose_dim != mcfg.pose_dim) {
    throw std::invalid_argument("eval: checkpoint and dataset dimensions do not match");
  }
  const Dataset train_ds = delrank::load_dataset(cfg.data_train);

  const std::vector<double> scores =
      delrank::score_records(params, mcfg, eval_ds, mode, flags.threads);
  const delrank::EvalReport report = delrank::evaluate(eval_ds, scores, train_ds, cfg.eval_top_k);

  json out_json = json::parse(delrank::eval_report_json(report));
  const std::string csv_path = out + ".rankings.csv";
  delrank::write_rankings_csv(csv_path, eval_ds, scores);
  out_json["rankings_csv"] = csv_path;

  if (!zero_shot_path.empty()) {
    const Dataset transfer_ds = delrank::load_dataset(zero_shot_path);
    const delrank::EvalReport transfer = delrank::zero_shot_eval(
        params, mcfg, mode, transfer_ds, train_ds, cfg.eval_top_k, flags.threads);
    out_json["zero_shot"] = json::parse(delrank::eval_report_json(transfer));
  }

  delrank::write_text_file(out, out_json.dump(2) + "\n");
  std::cout << out_json.dump(2) << std::endl;
  write_manifest(out, "eval", cfg, out_json.dump());
  return 0;
}

int cmd_rank(const CommonFlags& flags, const std::string& checkpoint_path,
             const std::string& data_path) {
  RunConfig cfg = resolve_config(flags);
  const std::string out = flags.out.empty() ? "rankings.csv" : flags.out;

  const ParamStore params = delrank::load_checkpoint(checkpoint_path);
  const ModelConfig mcfg = model_from_manifest(checkpoint_path);
  const delrank::ScoreMode mode = score_mode_from_manifest(checkpoint_path);

  const Dataset ds = delrank::load_dataset(data_path);
  if (ds.fingerprint_bits != mcfg.fingerprint_bits || ds.pose_dim != mcfg.pose_dim) {
    throw std::invalid_argument("rank: checkpoint and dataset dimensions do not match");
  }
  const std::vector<double> scores = delrank::score_records(params, mcfg, ds, mode, flags.threads);
  delrank::write_rankings_csv(out, ds, scores);
  write_manifest(out, "rank", cfg, json{{"rows", ds.size()}}.dump());
  delrank::log_info("rankings written to %s", out.c_str());
  return 0;
}

// Per-loss finite-difference table on small random batches. The fault hook
// corrupts the analytic gradients so the failure path stays testable.
int cmd_gradcheck(const CommonFlags& flags, double eps, bool inject_fault) {
  RunConfig cfg = resolve_config(flags);

  delrank::SyntheticSpec spec;
  spec.n_compounds = 6;
  spec.fingerprint_bits = 24;
  spec.pose_dim = 6;
  spec.poses_per_compound = 2;
  spec.pharmacophore_bits = 6;
  const Dataset ds = delrank::generate_synthetic(spec, cfg.seed);

  ModelConfig mcfg;
  mcfg.fingerprint_bits = spec.fingerprint_bits;
  mcfg.pose_dim = spec.pose_dim;
  mcfg.hidden = 12;
  delrank::TrainConfig tcfg = cfg.train;
  tcfg.rank.top_k = 3;

  delrank::Rng rng(delrank::mix_seed(cfg.seed, 1));
  const std::size_t n = 6;
  std::vector<double> pred(n), act(n), truth(n);
  std::vector<long> m_counts(n), r_counts(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    pred[i] = rng.uniform(0.1, 5.0);
    act[i] = rng.uniform(0.05, 0.95);
    m_counts[i] = static_cast<long>(rng.bounded(6));
    r_counts[i] = static_cast<long>(rng.bounded(9));
    truth[i] = static_cast<double>(r_counts[i]);
    labels[i] = rng.bernoulli(0.3) ? 1 : 0;
  }

  delrank::RankConfig rank_cfg = tcfg.rank;
  rank_cfg.top_k = std::min(rank_cfg.top_k, n);

  struct Check {
    std::string name;
    delrank::ScalarFn fn;
    ParamStore params;
  };
  std::vector<Check> checks;

  {
    ParamStore p;
    p.add("lambda_m", delrank::Tensor::from_vector(std::vector<double>(pred.begin(), pred.end())));
    p.add("lambda_r", delrank::Tensor::from_vector(act));
    delrank::ZipParams::init(p, 0.4, 0.6);
    checks.push_back({"zip_nll_batch",
                      [m_counts, r_counts](delrank::Tape& t, const ParamStore& ps) {
                        return delrank::zip_nll_batch(
                            m_counts, r_counts, t.param(ps, "lambda_m"), t.param(ps, "lambda_r"),
                            t.param(ps, delrank::ZipParams::kPiMatrixLogit),
                            t.param(ps, delrank::ZipParams::kPiTargetLogit));
                      },
                      std::move(p)});
  }
  {
    ParamStore p;
    p.add("pred", delrank::Tensor::from_vector(pred));
    checks.push_back({"psr_loss",
                      [truth, rank_cfg](delrank::Tape& t, const ParamStore& ps) {
                        return delrank::psr_loss(t.param(ps, "pred"), truth, rank_cfg);
                      },
                      std::move(p)});
  }
  {
    ParamStore p;
    p.add("pred", delrank::Tensor::from_vector(pred));
    checks.push_back({"lgr_loss",
                      [truth, rank_cfg](delrank::Tape& t, const ParamStore& ps) {
                        return delrank::lgr_loss(t.param(ps, "pred"), truth, rank_cfg);
                      },
                      std::move(p)});
  }
  {
    ParamStore p;
    p.add("pred", delrank::Tensor::from_vector(pred));
    p.add("act", delrank::Tensor::from_vector(act));
    checks.push_back({"consistency_loss",
                      [truth, labels](delrank::Tape& t, const ParamStore& ps) {
                        return delrank::consistency_loss(truth, t.param(ps, "pred"), labels,
                                                         t.param(ps, "act"));
                      },
                      std::move(p)});
  }
  {
    ParamStore p;
    delrank::init_model_params(p, mcfg, cfg.seed);
    delrank::ZipParams::init(p);
    std::vector<std::size_t> batch = {0, 1, 2, 3, 4, 5};
    checks.push_back({"total_loss",
                      [&ds, mcfg, tcfg, batch](delrank::Tape& t, const ParamStore& ps) {
                        return delrank::total_loss(t, ps, mcfg, tcfg, ds, batch).total;
                      },
                      std::move(p)});
  }

  constexpr double kLimit = 1e-4;
  bool all_pass = true;
  json rows = json::array();
  std::printf("%-18s %-14s %-10s %s\n", "loss", "max_rel_err", "limit", "verdict");
  for (const auto& check : checks) {
    double err;
    if (inject_fault) {
      delrank::Tape tape;
      const delrank::Var out = check.fn(tape, check.params);
      delrank::GradMap grads = tape.backward(out, check.params);
      for (auto& [name, g] : grads) {
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] = g[i] * 1.05 + 1e-3;
      }
      err = delrank::grad_check_against(check.fn, check.params, grads, eps);
    } else {
      err = delrank::grad_check(check.fn, check.params, eps);
    }
    const bool pass = err <= kLimit;
    all_pass = all_pass && pass;
    std::printf("%-18s %-14.3e %-10.0e %s\n", check.name.c_str(), err, kLimit,
                pass ? "PASS" : "FAIL");
    rows.push_back({{"loss", check.name}, {"max_rel_err", err}, {"pass", pass}});
  }

  const std::string out = flags.out.empty() ? "gradcheck_report.json" : flags.out;
  json report = {{"eps", eps}, {"limit", kLimit}, {"fault_injected", inject_fault},
                 {"all_pass", all_pass}, {"checks", rows}};
  delrank::write_text_file(out, report.dump(2) + "\n");
  write_manifest(out, "gradcheck", cfg, report.dump());
  return all_pass ? 0 : 1;
}

void emit_error_json(const std::string& type, const std::string& message) {
  json j = {{"error", {{"type", type}, {"message", message}}}};
  std::cerr << j.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DEL read-count denoising: ranking-regularized zero-inflated "
               "Poisson regression with activity-referenced correction"};
  app.require_subcommand(1);

  CommonFlags flags;
  double eps = 1e-5;
  bool inject_fault = false;
  std::size_t top_k = 50;
  std::string checkpoint_path, data_path, zero_shot_path;

  auto add_common = [&flags](CLI::App* sub, bool with_out = true) {
    sub->add_option("--config", flags.config_path, "Config file (key = value lines)");
    sub->add_option("--seed", flags.seed, "Seed override")->each([&flags](const std::string&) {
      flags.seed_set = true;
    });
    sub->add_option("--threads", flags.threads, "Worker threads (1 = fully deterministic)");
    if (with_out) sub->add_option("--out", flags.out, "Primary output path");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "Generate a synthetic screen dataset");
  add_common(simulate);

  CLI::App* train = app.add_subcommand("train", "Train on a dataset and write a checkpoint");
  add_common(train);

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint against Ki labels");
  eval->add_option("checkpoint", checkpoint_path, "Parameter checkpoint")->required();
  eval->add_option("data", data_path, "Evaluation dataset (jsonl)")->required();
  add_common(eval);
  CLI::Option* top_k_opt = eval->add_option("--top-k", top_k, "Selection size for the top-k report");
  eval->add_option("--zero-shot", zero_shot_path, "Second dataset for transfer evaluation");

  CLI::App* rank = app.add_subcommand("rank", "Write compounds sorted by predicted score");
  rank->add_option("checkpoint", checkpoint_path, "Parameter checkpoint")->required();
  rank->add_option("data", data_path, "Dataset to score (jsonl)")->required();
  add_common(rank);

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every loss");
  add_common(gradcheck);
  gradcheck->add_option("--eps", eps, "Central-difference step");
  gradcheck->add_flag("--inject-fault", inject_fault,
                      "Corrupt the analytic gradients (negative-control hook)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    emit_error_json("usage", e.what());
    return 1;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(flags);
    if (train->parsed()) return cmd_train(flags);
    if (eval->parsed()) {
      return cmd_eval(flags, checkpoint_path, data_path, top_k, top_k_opt->count() > 0,
                      zero_shot_path);
    }
    if (rank->parsed()) return cmd_rank(flags, checkpoint_path, data_path);
    if (gradcheck->parsed()) return cmd_gradcheck(flags, eps, inject_fault);
  } catch (const std::invalid_argument& e) {
    emit_error_json("invalid_argument", e.what());
    return 1;
  } catch (const std::domain_error& e) {
    emit_error_json("domain_error", e.what());
    return 1;
  } catch (const std::exception& e) {
    emit_error_json("runtime_error", e.what());
    return 1;
  }
  return 0;
}

#include "delrank/config.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "delrank/hash.hpp"

namespace delrank {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': cannot parse '" + value + "' as a number");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': cannot parse '" + value +
                                "' as a non-negative integer");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config key '" + key + "': cannot parse '" + value + "' as a boolean");
}

struct Preset {
  double gamma;
  double rho;
  double beta;
  double temperature;
  double sigma_w;
  double tau;
};

// Appendix hyperparameter table; the two 5fl4 configurations carry no
// activity labels, so their consistency weight is zero.
const std::map<std::string, Preset>& presets() {
  static const std::map<std::string, Preset> table = {
      {"3p3h", {1.0, 1e11, 0.5, 0.8, 1e-3, 1e-3}},
      {"4kp5-A", {0.1, 1e9, 0.91, 0.3, 1e-3, 1e-3}},
      {"4kp5-OA", {0.1, 1e10, 0.91, 0.2, 1e-3, 1e-3}},
      {"5fl4-9p", {0.0, 1e8, 0.67, 0.9, 1e-4, 1e-3}},
      {"5fl4-20p", {0.0, 1e8, 0.5, 0.2, 1e-3, 1e-3}},
  };
  return table;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, p] : presets()) names.push_back(name);
  return names;
}

void apply_preset(RunConfig& cfg, const std::string& name) {
  auto it = presets().find(name);
  if (it == presets().end()) {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown preset '" + name + "' (known: " + known + ")");
  }
  const Preset& p = it->second;
  cfg.preset = name;
  cfg.train.consist_weight = p.gamma;
  cfg.train.rank_weight = p.rho;
  cfg.train.rank.beta = p.beta;
  cfg.train.rank.temperature = p.temperature;
  cfg.train.rank.sigma_w = p.sigma_w;
  cfg.train.rank.tau = p.tau;
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "seed") {
    cfg.seed = parse_uint(key, value);
    cfg.train.seed = cfg.seed;
  } else if (key == "preset") {
    apply_preset(cfg, value);
  } else if (key == "data.train") {
    cfg.data_train = value;
  } else if (key == "data.eval") {
    cfg.data_eval = value;
  } else if (key == "eval.top_k") {
    cfg.eval_top_k = parse_uint(key, value);
  } else if (key == "sim.n") {
    cfg.sim.n_compounds = parse_uint(key, value);
  } else if (key == "sim.d") {
    cfg.sim.fingerprint_bits = parse_uint(key, value);
  } else if (key == "sim.m") {
    cfg.sim.pose_dim = parse_uint(key, value);
  } else if (key == "sim.poses") {
    cfg.sim.poses_per_compound = parse_uint(key, value);
  } else if (key == "sim.lambda_bg") {
    cfg.sim.lambda_bg = parse_double(key, value);
  } else if (key == "sim.enrich_scale") {
    cfg.sim.enrich_scale = parse_double(key, value);
  } else if (key == "sim.pi_m") {
    cfg.sim.pi_matrix = parse_double(key, value);
  } else if (key == "sim.pi_r") {
    cfg.sim.pi_target = parse_double(key, value);
  } else if (key == "sim.affinity_spread") {
    cfg.sim.affinity_spread = parse_double(key, value);
  } else if (key == "sim.pharmacophore_bits") {
    cfg.sim.pharmacophore_bits = parse_uint(key, value);
  } else if (key == "sim.noise_level") {
    cfg.sim.noise_level = parse_double(key, value);
  } else if (key == "model.hidden") {
    cfg.model.hidden = parse_uint(key, value);
  } else if (key == "model.varsigma") {
    cfg.model.varsigma = parse_double(key, value);
  } else if (key == "model.n_iters") {
    cfg.model.n_iters = parse_uint(key, value);
  } else if (key == "model.use_feedback") {
    cfg.model.use_feedback = parse_bool(key, value);
  } else if (key == "model.pose_pool") {
    if (value != "mean") throw std::invalid_argument("config key 'model.pose_pool': only 'mean' is supported");
  } else if (key == "rank.beta") {
    cfg.train.rank.beta = parse_double(key, value);
    if (cfg.train.rank.beta < 0.0 || cfg.train.rank.beta > 1.0) {
      throw std::invalid_argument("config key 'rank.beta': must lie in [0, 1]");
    }
  } else if (key == "rank.temperature") {
    cfg.train.rank.temperature = parse_double(key, value);
  } else if (key == "rank.tau") {
    cfg.train.rank.tau = parse_double(key, value);
  } else if (key == "rank.sigma_w") {
    cfg.train.rank.sigma_w = parse_double(key, value);
  } else if (key == "rank.top_k") {
    cfg.train.rank.top_k = parse_uint(key, value);
  } else if (key == "rank.eps") {
    cfg.train.rank.eps = parse_double(key, value);
  } else if (key == "train.rho") {
    cfg.train.rank_weight = parse_double(key, value);
  } else if (key == "train.gamma") {
    cfg.train.consist_weight = parse_double(key, value);
  } else if (key == "train.batch_size") {
    cfg.train.batch_size = parse_uint(key, value);
  } else if (key == "train.epochs") {
    cfg.train.epochs = parse_uint(key, value);
  } else if (key == "train.lr") {
    cfg.train.adam.lr = parse_double(key, value);
  } else if (key == "train.adam_b1") {
    cfg.train.adam.b1 = parse_double(key, value);
  } else if (key == "train.adam_b2") {
    cfg.train.adam.b2 = parse_double(key, value);
  } else if (key == "train.adam_eps") {
    cfg.train.adam.eps = parse_double(key, value);
  } else if (key == "train.score_mode") {
    cfg.train.score_mode = score_mode_from_string(value);
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file '" + path + "'");
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty key or value");
    }
    try {
      apply_config_entry(cfg, key, value);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

std::string canonical_config_text(const RunConfig& cfg) {
  std::map<std::string, std::string> kv;
  auto put_num = [&kv](const std::string& key, double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    kv[key] = os.str();
  };
  auto put_int = [&kv](const std::string& key, std::uint64_t v) { kv[key] = std::to_string(v); };

  put_int("seed", cfg.seed);
  kv["preset"] = cfg.preset.empty() ? "-" : cfg.preset;
  kv["data.train"] = cfg.data_train.empty() ? "-" : cfg.data_train;
  kv["data.eval"] = cfg.data_eval.empty() ? "-" : cfg.data_eval;
  put_int("eval.top_k", cfg.eval_top_k);
  put_int("sim.n", cfg.sim.n_compounds);
  put_int("sim.d", cfg.sim.fingerprint_bits);
  put_int("sim.m", cfg.sim.pose_dim);
  put_int("sim.poses", cfg.sim.poses_per_compound);
  put_num("sim.lambda_bg", cfg.sim.lambda_bg);
  put_num("sim.enrich_scale", cfg.sim.enrich_scale);
  put_num("sim.pi_m", cfg.sim.pi_matrix);
  put_num("sim.pi_r", cfg.sim.pi_target);
  put_num("sim.affinity_spread", cfg.sim.affinity_spread);
  put_int("sim.pharmacophore_bits", cfg.sim.pharmacophore_bits);
  put_num("sim.noise_level", cfg.sim.noise_level);
  put_int("model.hidden", cfg.model.hidden);
  put_num("model.varsigma", cfg.model.varsigma);
  put_int("model.n_iters", cfg.model.n_iters);
  kv["model.use_feedback"] = cfg.model.use_feedback ? "true" : "false";
  kv["model.pose_pool"] = "mean";
  put_num("rank.beta", cfg.train.rank.beta);
  put_num("rank.temperature", cfg.train.rank.temperature);
  put_num("rank.tau", cfg.train.rank.tau);
  put_num("rank.sigma_w", cfg.train.rank.sigma_w);
  put_int("rank.top_k", cfg.train.rank.top_k);
  put_num("rank.eps", cfg.train.rank.eps);
  put_num("train.rho", cfg.train.rank_weight);
  put_num("train.gamma", cfg.train.consist_weight);
  put_int("train.batch_size", cfg.train.batch_size);
  put_int("train.epochs", cfg.train.epochs);
  put_num("train.lr", cfg.train.adam.lr);
  put_num("train.adam_b1", cfg.train.adam.b1);
  put_num("train.adam_b2", cfg.train.adam.b2);
  put_num("train.adam_eps", cfg.train.adam.eps);
  kv["train.score_mode"] = to_string(cfg.train.score_mode);

  std::ostringstream os;
  for (const auto& [key, value] : kv) os << key << " = " << value << '\n';
  return os.str();
}

std::string config_hash(const RunConfig& cfg) { return fnv1a64_hex(canonical_config_text(cfg)); }

std::string manifest_json(const std::string& command, const RunConfig& cfg,
                          const std::string& extras_json) {
  nlohmann::json j;
  j["command"] = command;
  j["seed"] = cfg.seed;
  j["config_hash"] = config_hash(cfg);

  nlohmann::json config = nlohmann::json::object();
  std::istringstream lines(canonical_config_text(cfg));
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find(" = ");
    config[line.substr(0, eq)] = line.substr(eq + 3);
  }
  j["config"] = config;
  if (!extras_json.empty()) j["result"] = nlohmann::json::parse(extras_json);
  return j.dump(2);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << text;
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace delrank

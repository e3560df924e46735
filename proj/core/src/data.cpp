#include "delrank/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "delrank/rng.hpp"

namespace delrank {

namespace {

using nlohmann::json;

constexpr char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 3 <= bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back(kB64Alphabet[(v >> 6) & 63]);
    out.push_back(kB64Alphabet[v & 63]);
    i += 3;
  }
  const std::size_t rem = bytes.size() - i;
  if (rem == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back('=');
    out.push_back('=');
  } else if (rem == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back(kB64Alphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

std::vector<std::uint8_t> base64_decode(const std::string& s) {
  if (s.size() % 4 != 0) throw std::invalid_argument("base64: length not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(s.size() / 4 * 3);
  for (std::size_t i = 0; i < s.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = s[i + k];
      if (c == '=') {
        if (i + 4 != s.size() || k < 2) throw std::invalid_argument("base64: bad padding");
        vals[k] = 0;
        ++pad;
      } else {
        if (pad > 0) throw std::invalid_argument("base64: data after padding");
        vals[k] = b64_value(c);
        if (vals[k] < 0) throw std::invalid_argument("base64: invalid character");
      }
    }
    const std::uint32_t v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  return out;
}

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("line " + std::to_string(line_no) + ": " + what);
}

void validate_record(const CompoundRecord& r, std::size_t d, std::size_t m) {
  if (r.fingerprint.size() * 8 != d) {
    throw std::runtime_error("inconsistent fingerprint length for record '" + r.id + "'");
  }
  if (r.matrix_count < 0) throw std::runtime_error("negative matrix_count for record '" + r.id + "'");
  if (r.target_count < 0) throw std::runtime_error("negative target_count for record '" + r.id + "'");
  if (r.activity != 0 && r.activity != 1) {
    throw std::runtime_error("activity label must be 0 or 1 for record '" + r.id + "'");
  }
  if (!(r.mol_weight > 0.0)) throw std::runtime_error("mol_weight must be positive for record '" + r.id + "'");
  if (r.ki.has_value() && !(*r.ki > 0.0)) {
    throw std::runtime_error("ki must be positive when present for record '" + r.id + "'");
  }
  if (r.poses.empty()) throw std::runtime_error("record '" + r.id + "' has no poses");
  for (const auto& pose : r.poses) {
    if (pose.size() != m) throw std::runtime_error("pose length mismatch for record '" + r.id + "'");
  }
}

// Fixed pose-projection direction; golden-angle phases avoid degenerate
// periodicity at small m. Intentionally independent of the seed so that
// datasets drawn from different seeds stay mutually scorable.
double pose_basis(std::size_t j) { return std::sin(2.39996322972865332 * static_cast<double>(j + 1)); }

// Logistic link for pharmacophore bits on the standardized log-affinity.
// Slope 2 with offset 2 concentrates actives in the high-affinity tail
// (base rate near 8%), so a good ranker separates cleanly from chance.
constexpr double kActivityLogitOffset = 2.0;
constexpr double kActivityLogitSlope = 2.0;

}  // namespace

void Dataset::validate() const {
  if (records.empty()) throw std::runtime_error("dataset is empty");
  if (fingerprint_bits == 0 || fingerprint_bits % 8 != 0) {
    throw std::runtime_error("fingerprint length must be a positive multiple of 8");
  }
  if (pose_dim == 0) throw std::runtime_error("pose feature length must be positive");
  for (const auto& r : records) validate_record(r, fingerprint_bits, pose_dim);
}

void SyntheticSpec::validate() const {
  if (n_compounds == 0) throw std::invalid_argument("synthetic spec: n_compounds must be positive");
  if (fingerprint_bits == 0 || fingerprint_bits % 8 != 0) {
    throw std::invalid_argument("synthetic spec: fingerprint_bits must be a positive multiple of 8");
  }
  if (pose_dim == 0) throw std::invalid_argument("synthetic spec: pose_dim must be positive");
  if (poses_per_compound == 0) throw std::invalid_argument("synthetic spec: poses_per_compound must be positive");
  if (!(lambda_bg > 0.0)) throw std::invalid_argument("synthetic spec: lambda_bg must be positive");
  if (!(enrich_scale >= 0.0)) throw std::invalid_argument("synthetic spec: enrich_scale must be non-negative");
  if (pi_matrix < 0.0 || pi_matrix >= 1.0) throw std::invalid_argument("synthetic spec: pi_matrix must lie in [0, 1)");
  if (pi_target < 0.0 || pi_target >= 1.0) throw std::invalid_argument("synthetic spec: pi_target must lie in [0, 1)");
  if (!(affinity_spread > 0.0)) throw std::invalid_argument("synthetic spec: affinity_spread must be positive");
  if (pharmacophore_bits == 0 || pharmacophore_bits > fingerprint_bits) {
    throw std::invalid_argument("synthetic spec: pharmacophore_bits must lie in [1, fingerprint_bits]");
  }
  if (noise_level < 0.0) throw std::invalid_argument("synthetic spec: noise_level must be non-negative");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_dataset: cannot open '" + path + "'");

  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  bool have_meta = false;

  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      line_error(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!have_meta) {
      if (!j.contains("__meta__")) line_error(line_no, "first line must be the __meta__ header");
      const json& meta = j["__meta__"];
      try {
        ds.fingerprint_bits = meta.at("d").get<std::size_t>();
        ds.pose_dim = meta.at("m").get<std::size_t>();
        ds.provenance = meta.value("provenance", std::string{});
      } catch (const json::exception& e) {
        line_error(line_no, std::string("bad __meta__ header: ") + e.what());
      }
      if (ds.fingerprint_bits == 0 || ds.fingerprint_bits % 8 != 0) {
        line_error(line_no, "__meta__.d must be a positive multiple of 8");
      }
      if (ds.pose_dim == 0) line_error(line_no, "__meta__.m must be positive");
      have_meta = true;
      continue;
    }
    CompoundRecord r;
    try {
      r.id = j.at("id").get<std::string>();
      r.fingerprint = base64_decode(j.at("fp").get<std::string>());
      for (const auto& pose : j.at("poses")) {
        r.poses.push_back(pose.get<std::vector<double>>());
      }
      if (!j.at("M").is_number_integer()) throw std::invalid_argument("field M must be an integer");
      if (!j.at("R").is_number_integer()) throw std::invalid_argument("field R must be an integer");
      r.matrix_count = j.at("M").get<long>();
      r.target_count = j.at("R").get<long>();
      r.activity = j.at("y").get<int>();
      r.mol_weight = j.at("mw").get<double>();
      if (!j.at("ki").is_null()) r.ki = j.at("ki").get<double>();
    } catch (const json::exception& e) {
      line_error(line_no, std::string("bad record: ") + e.what());
    } catch (const std::invalid_argument& e) {
      line_error(line_no, e.what());
    }
    if (r.fingerprint.size() * 8 != ds.fingerprint_bits) {
      line_error(line_no, "inconsistent fingerprint length");
    }
    try {
      validate_record(r, ds.fingerprint_bits, ds.pose_dim);
    } catch (const std::runtime_error& e) {
      line_error(line_no, e.what());
    }
    ds.records.push_back(std::move(r));
  }
  if (!have_meta) throw std::runtime_error("load_dataset: '" + path + "' has no __meta__ header");
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("save_dataset: cannot open '" + path + "' for writing");
  json meta = {{"__meta__",
                {{"d", ds.fingerprint_bits}, {"m", ds.pose_dim}, {"provenance", ds.provenance}}}};
  os << meta.dump() << '\n';
  for (const auto& r : ds.records) {
    json j;
    j["id"] = r.id;
    j["fp"] = base64_encode(r.fingerprint);
    j["poses"] = r.poses;
    j["M"] = r.matrix_count;
    j["R"] = r.target_count;
    j["y"] = r.activity;
    j["mw"] = r.mol_weight;
    if (r.ki.has_value()) {
      j["ki"] = *r.ki;
    } else {
      j["ki"] = nullptr;
    }
    os << j.dump() << '\n';
  }
  if (!os) throw std::runtime_error("save_dataset: write failed for '" + path + "'");
}

std::array<Dataset, 3> split_dataset(const Dataset& ds, double train_frac, double val_frac,
                                     double test_frac, std::uint64_t seed) {
  ds.validate();
  if (!(train_frac > 0.0) || !(val_frac > 0.0) || !(test_frac > 0.0)) {
    throw std::invalid_argument("split_dataset: fractions must be positive");
  }
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
    throw std::invalid_argument("split_dataset: fractions must sum to 1");
  }
  const std::size_t n = ds.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(val_frac * static_cast<double>(n)));
  if (n_train + n_val > n) throw std::invalid_argument("split_dataset: rounding exceeded dataset size");

  std::array<Dataset, 3> out;
  for (auto& part : out) {
    part.fingerprint_bits = ds.fingerprint_bits;
    part.pose_dim = ds.pose_dim;
  }
  out[0].provenance = ds.provenance + " [train]";
  out[1].provenance = ds.provenance + " [val]";
  out[2].provenance = ds.provenance + " [test]";
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t part = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
    out[part].records.push_back(ds.records[order[i]]);
  }
  return out;
}

std::vector<double> noiseless_pose(double affinity, std::size_t pose_dim) {
  std::vector<double> pose(pose_dim);
  const double h = std::log1p(affinity);
  for (std::size_t j = 0; j < pose_dim; ++j) pose[j] = pose_basis(j) * h;
  return pose;
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);

  Dataset ds;
  ds.fingerprint_bits = spec.fingerprint_bits;
  ds.pose_dim = spec.pose_dim;
  {
    std::ostringstream prov;
    prov << "synthetic(seed=" << seed << ", n=" << spec.n_compounds << ")";
    ds.provenance = prov.str();
  }
  ds.records.reserve(spec.n_compounds);

  for (std::size_t i = 0; i < spec.n_compounds; ++i) {
    CompoundRecord r;
    {
      std::ostringstream id;
      id << "cmpd-" << seed << "-" << i;
      r.id = id.str();
    }

    const double z = rng.normal();
    const double affinity = std::exp(spec.affinity_spread * z);  // LogNormal(0, spread)
    r.ki = 1000.0 / affinity;

    // Pharmacophore bits share one logistic link on standardized log-affinity;
    // the designated first bit defines the activity label.
    const double p_set = 1.0 / (1.0 + std::exp(-kActivityLogitSlope * (z - kActivityLogitOffset)));
    r.fingerprint.assign(spec.fingerprint_bits / 8, 0);
    for (std::size_t b = 0; b < spec.fingerprint_bits; ++b) {
      const double p = b < spec.pharmacophore_bits ? p_set : 0.5;
      if (rng.bernoulli(p)) r.set_fingerprint_bit(b);
    }
    r.activity = r.fingerprint_bit(0) ? 1 : 0;

    r.poses.reserve(spec.poses_per_compound);
    for (std::size_t p = 0; p < spec.poses_per_compound; ++p) {
      std::vector<double> pose = noiseless_pose(affinity, spec.pose_dim);
      if (spec.noise_level > 0.0) {
        for (double& x : pose) x += spec.noise_level * rng.normal();
      }
      r.poses.push_back(std::move(pose));
    }

    r.mol_weight = rng.uniform(150.0, 750.0);
    r.matrix_count = rng.zip_sample(spec.lambda_bg, spec.pi_matrix);
    r.target_count = rng.zip_sample(spec.lambda_bg + spec.enrich_scale * affinity, spec.pi_target);

    ds.records.push_back(std::move(r));
  }
  return ds;
}

double percentile(const std::vector<double>& values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile: empty sample");
  if (p < 0.0 || p > 100.0) throw std::invalid_argument("percentile: p must lie in [0, 100]");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() == 1) return sorted[0];
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - std::floor(h);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<bool> mw_percentile_mask(const Dataset& train, const Dataset& eval, double lo,
                                     double hi) {
  if (train.records.empty()) throw std::invalid_argument("mw_percentile_mask: empty training set");
  if (!(lo >= 0.0 && lo < hi && hi <= 100.0)) {
    throw std::invalid_argument("mw_percentile_mask: need 0 <= lo < hi <= 100");
  }
  std::vector<double> weights;
  weights.reserve(train.size());
  for (const auto& r : train.records) weights.push_back(r.mol_weight);
  const double lo_val = percentile(weights, lo);
  const double hi_val = percentile(weights, hi);

  std::vector<bool> mask;
  mask.reserve(eval.size());
  for (const auto& r : eval.records) {
    mask.push_back(r.mol_weight >= lo_val && r.mol_weight <= hi_val);
  }
  return mask;
}

}  // namespace delrank

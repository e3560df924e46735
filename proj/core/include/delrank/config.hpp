#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "delrank/arc_model.hpp"
#include "delrank/data.hpp"
#include "delrank/trainer.hpp"

namespace delrank {

// Everything a command needs, merged from a flat key = value config file
// (dotted namespaces, '#' comments) plus command-line overrides. Unknown
// keys are rejected; each owning module validates its own block before use.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string preset;  // last preset applied, if any

  SyntheticSpec sim;
  ModelConfig model;   // fingerprint_bits / pose_dim stay 0 until data is seen
  TrainConfig train;
  std::size_t eval_top_k = 50;

  std::string data_train;
  std::string data_eval;
};

RunConfig parse_config_file(const std::string& path);

// Applies one `key = value` assignment; throws on unknown keys or bad values.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

// Hyperparameter presets named after the benchmark configurations:
// 3p3h, 4kp5-A, 4kp5-OA, 5fl4-9p, 5fl4-20p.
void apply_preset(RunConfig& cfg, const std::string& name);
std::vector<std::string> preset_names();

// Sorted key = value dump of the resolved configuration; its FNV-1a hash is
// the config hash recorded in every manifest.
std::string canonical_config_text(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

// Manifest JSON: command, seed, config hash, resolved config, plus
// command-specific extras (serialized JSON object or empty).
std::string manifest_json(const std::string& command, const RunConfig& cfg,
                          const std::string& extras_json = "");

void write_text_file(const std::string& path, const std::string& text);

}  // namespace delrank

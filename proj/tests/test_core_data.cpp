#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "delrank/data.hpp"
#include "delrank/evaluator.hpp"
#include "delrank/rng.hpp"
#include "oracles.hpp"

using namespace delrank;

namespace {

SyntheticSpec tiny_spec() {
  SyntheticSpec spec;
  spec.n_compounds = 50;
  spec.fingerprint_bits = 64;
  spec.pose_dim = 4;
  spec.poses_per_compound = 2;
  spec.pharmacophore_bits = 8;
  return spec;
}

std::string write_lines(const std::vector<std::string>& lines, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  for (const auto& l : lines) os << l << '\n';
  return path;
}

// 8 bits -> "AA==" style fingerprints; bit 0 set gives 0x01.
const char* kMetaD8 = R"({"__meta__": {"d": 8, "m": 2, "provenance": "t"}})";
std::string record_line(const std::string& id, const std::string& fp, long m, long r) {
  return "{\"id\": \"" + id + "\", \"fp\": \"" + fp +
         "\", \"poses\": [[0.1, 0.2]], \"M\": " + std::to_string(m) +
         ", \"R\": " + std::to_string(r) + ", \"y\": 0, \"mw\": 310.5, \"ki\": null}";
}

}  // namespace

TEST_CASE("load_dataset ingests valid lines in order") {
  const std::string path = write_lines(
      {kMetaD8, record_line("a", "AQ==", 0, 3), record_line("b", "AA==", 1, 0),
       record_line("c", "/w==", 7, 2)},
      "t_load_ok.jsonl");
  const Dataset ds = load_dataset(path);
  CHECK(ds.size() == 3);
  CHECK(ds.fingerprint_bits == 8);
  CHECK(ds.records[0].id == "a");
  CHECK(ds.records[0].fingerprint_bit(0));
  CHECK_FALSE(ds.records[0].fingerprint_bit(1));
  CHECK(ds.records[2].fingerprint_bit(7));
  CHECK(ds.records[0].target_count == 3);
  std::remove(path.c_str());
}

TEST_CASE("load_dataset reports the offending line") {
  SUBCASE("negative target count") {
    const std::string path =
        write_lines({kMetaD8, record_line("a", "AQ==", 0, 3), record_line("b", "AA==", 0, -1)},
                    "t_load_neg.jsonl");
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("line 3"), std::runtime_error);
    try {
      load_dataset(path);
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("target_count") != std::string::npos);
    }
    std::remove(path.c_str());
  }
  SUBCASE("inconsistent fingerprint length") {
    // 16-bit fingerprint in an 8-bit file.
    const std::string path = write_lines(
        {kMetaD8, record_line("a", "AQ==", 0, 3), record_line("b", "AAE=", 0, 0)},
        "t_load_mixed.jsonl");
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("inconsistent fingerprint length"),
                         std::runtime_error);
    std::remove(path.c_str());
  }
  SUBCASE("malformed json") {
    const std::string path =
        write_lines({kMetaD8, "{not json"}, "t_load_bad.jsonl");
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("line 2"), std::runtime_error);
    std::remove(path.c_str());
  }
}

TEST_CASE("dataset save/load round-trip is byte-stable") {
  const Dataset ds = generate_synthetic(tiny_spec(), 5);
  save_dataset(ds, "t_roundtrip_1.jsonl");
  const Dataset back = load_dataset("t_roundtrip_1.jsonl");
  save_dataset(back, "t_roundtrip_2.jsonl");

  std::ifstream f1("t_roundtrip_1.jsonl", std::ios::binary);
  std::ifstream f2("t_roundtrip_2.jsonl", std::ios::binary);
  const std::string c1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string c2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(c1 == c2);
  CHECK(!c1.empty());
  std::remove("t_roundtrip_1.jsonl");
  std::remove("t_roundtrip_2.jsonl");
}

TEST_CASE("split_dataset produces exact proportions deterministically") {
  SyntheticSpec spec = tiny_spec();
  spec.n_compounds = 100;
  const Dataset ds = generate_synthetic(spec, 3);

  const auto parts = split_dataset(ds, 0.8, 0.1, 0.1, 7);
  CHECK(parts[0].size() == 80);
  CHECK(parts[1].size() == 10);
  CHECK(parts[2].size() == 10);

  const auto again = split_dataset(ds, 0.8, 0.1, 0.1, 7);
  for (int p = 0; p < 3; ++p) {
    REQUIRE(again[p].size() == parts[p].size());
    for (std::size_t i = 0; i < parts[p].size(); ++i) {
      CHECK(again[p].records[i].id == parts[p].records[i].id);
    }
  }

  // Disjoint cover.
  std::set<std::string> ids;
  for (const auto& part : parts) {
    for (const auto& r : part.records) CHECK(ids.insert(r.id).second);
  }
  CHECK(ids.size() == 100);

  CHECK_THROWS_AS(split_dataset(ds, 0.5, 0.5, 0.5, 7), std::invalid_argument);
}

TEST_CASE("generate_synthetic is byte-identical for a fixed seed") {
  const Dataset a = generate_synthetic(tiny_spec(), 17);
  const Dataset b = generate_synthetic(tiny_spec(), 17);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.records[i].id == b.records[i].id);
    CHECK(a.records[i].fingerprint == b.records[i].fingerprint);
    CHECK(a.records[i].matrix_count == b.records[i].matrix_count);
    CHECK(a.records[i].target_count == b.records[i].target_count);
    CHECK(a.records[i].mol_weight == b.records[i].mol_weight);
    CHECK(*a.records[i].ki == *b.records[i].ki);
    for (std::size_t p = 0; p < a.records[i].poses.size(); ++p) {
      CHECK(a.records[i].poses[p] == b.records[i].poses[p]);
    }
  }
}

TEST_CASE("zero inflation dominates matrix counts at pi_m near one") {
  SyntheticSpec spec = tiny_spec();
  spec.n_compounds = 10000;
  spec.pi_matrix = 0.99;
  const Dataset ds = generate_synthetic(spec, 21);
  std::size_t zeros = 0;
  for (const auto& r : ds.records) zeros += r.matrix_count == 0 ? 1 : 0;
  CHECK(static_cast<double>(zeros) / static_cast<double>(ds.size()) >= 0.95);
}

TEST_CASE("empirical matrix zero fraction sits inside the 99% binomial band") {
  SyntheticSpec spec = tiny_spec();
  spec.n_compounds = 20000;
  spec.pi_matrix = 0.4;
  spec.lambda_bg = 1.3;
  const Dataset ds = generate_synthetic(spec, 33);
  std::size_t zeros = 0;
  for (const auto& r : ds.records) zeros += r.matrix_count == 0 ? 1 : 0;
  const double expected = spec.pi_matrix + (1.0 - spec.pi_matrix) * std::exp(-spec.lambda_bg);
  const double observed = static_cast<double>(zeros) / static_cast<double>(ds.size());
  const double half_width =
      2.5758 * std::sqrt(expected * (1.0 - expected) / static_cast<double>(ds.size()));
  CHECK(std::abs(observed - expected) <= half_width);
}

TEST_CASE("no enrichment means matrix and target counts are exchangeable") {
  SyntheticSpec spec = tiny_spec();
  spec.n_compounds = 10000;
  spec.enrich_scale = 0.0;
  spec.pi_target = spec.pi_matrix;
  const Dataset ds = generate_synthetic(spec, 55);
  std::vector<double> m, r;
  for (const auto& rec : ds.records) {
    m.push_back(static_cast<double>(rec.matrix_count));
    r.push_back(static_cast<double>(rec.target_count));
  }
  // Rank-sum test must fail to reject identical distributions at alpha = 0.01.
  CHECK(std::abs(oracle::mann_whitney_z(m, r)) < 2.5758);
}

TEST_CASE("noiseless poses are an exact function of the latent affinity") {
  SyntheticSpec spec = tiny_spec();
  spec.noise_level = 0.0;
  const Dataset ds = generate_synthetic(spec, 2);
  for (const auto& rec : ds.records) {
    const double affinity = 1000.0 / *rec.ki;
    const std::vector<double> expected = noiseless_pose(affinity, spec.pose_dim);
    for (const auto& pose : rec.poses) {
      REQUIRE(pose.size() == expected.size());
      for (std::size_t j = 0; j < pose.size(); ++j) {
        CHECK(pose[j] == doctest::Approx(expected[j]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("target counts anti-correlate with ki when enrichment is on") {
  SyntheticSpec spec = tiny_spec();
  spec.n_compounds = 5000;
  spec.noise_level = 0.0;
  spec.pi_target = 0.0;
  spec.enrich_scale = 4.0;
  const Dataset ds = generate_synthetic(spec, 77);
  std::vector<double> ki, counts;
  for (const auto& rec : ds.records) {
    ki.push_back(*rec.ki);
    counts.push_back(static_cast<double>(rec.target_count));
  }
  CHECK(spearman(counts, ki) < -0.3);
}

TEST_CASE("percentile matches the independent interpolation oracle") {
  const std::vector<double> train_weights = {100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
  CHECK(percentile(train_weights, 10.0) == doctest::Approx(190.0).epsilon(1e-12));
  CHECK(percentile(train_weights, 90.0) == doctest::Approx(910.0).epsilon(1e-12));

  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v;
    const std::size_t n = 2 + rng.bounded(40);
    for (std::size_t i = 0; i < n; ++i) v.push_back(rng.uniform(-100.0, 100.0));
    const double p = rng.uniform(0.0, 100.0);
    CHECK(percentile(v, p) == doctest::Approx(oracle::percentile_reference(v, p)).epsilon(1e-12));
  }
}

TEST_CASE("mw_percentile_mask brackets the training band") {
  SyntheticSpec spec = tiny_spec();
  spec.n_compounds = 10;
  Dataset train = generate_synthetic(spec, 8);
  for (std::size_t i = 0; i < 10; ++i) train.records[i].mol_weight = 100.0 * (i + 1);

  Dataset eval = train;
  eval.records[0].mol_weight = 550.0;  // inside [190, 910]
  eval.records[1].mol_weight = 50.0;   // below the training minimum
  eval.records[2].mol_weight = 190.0;  // boundary is inclusive

  const auto mask = mw_percentile_mask(train, eval, 10.0, 90.0);
  CHECK(mask[0]);
  CHECK_FALSE(mask[1]);
  CHECK(mask[2]);

  const auto all = mw_percentile_mask(train, train, 0.0, 100.0);
  for (bool b : all) CHECK(b);

  CHECK_THROWS_AS(mw_percentile_mask(Dataset{}, eval, 10.0, 90.0), std::invalid_argument);
  CHECK_THROWS_AS(mw_percentile_mask(train, eval, 90.0, 10.0), std::invalid_argument);
}

TEST_CASE("synthetic spec validation rejects bad ranges") {
  SyntheticSpec spec = tiny_spec();
  spec.pi_target = 1.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = tiny_spec();
  spec.lambda_bg = 0.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = tiny_spec();
  spec.pharmacophore_bits = spec.fingerprint_bits + 1;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

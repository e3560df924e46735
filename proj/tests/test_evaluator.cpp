#include <doctest.h>

#include <stdexcept>
#include <fstream>
#include <cstdio>

#include <algorithm>
#include <cmath>
#include <vector>

#include "delrank/evaluator.hpp"
#include "delrank/rng.hpp"
#include "oracles.hpp"

using namespace delrank;

namespace {

Dataset eval_dataset(std::size_t n, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_compounds = n;
  spec.fingerprint_bits = 16;
  spec.pose_dim = 4;
  spec.poses_per_compound = 1;
  spec.pharmacophore_bits = 4;
  return generate_synthetic(spec, seed);
}

}  // namespace

TEST_CASE("spearman closed cases") {
  CHECK(spearman({1, 2, 3, 4}, {1, 2, 3, 4}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(spearman({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(0.8).epsilon(1e-12));

  CHECK_THROWS_AS(spearman({1, 1, 1}, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(spearman({1, 2, 3}, {2, 2, 2}), std::invalid_argument);
  CHECK_THROWS_AS(spearman({1}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(spearman({1, 2}, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("midrank spearman equals the brute-force oracle with ties") {
  Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.bounded(40);
    std::vector<double> x(n), y(n);
    bool degenerate = true;
    while (degenerate) {
      for (std::size_t i = 0; i < n; ++i) {
        // Coarse grid forces heavy ties.
        x[i] = static_cast<double>(rng.bounded(6));
        y[i] = static_cast<double>(rng.bounded(6));
      }
      degenerate = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) ||
                   std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
    }
    CHECK(spearman(x, y) == doctest::Approx(oracle::spearman_bruteforce(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("midrank spearman equals the closed form on tie-free inputs") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.bounded(30);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform(-10, 10);
      y[i] = rng.uniform(-10, 10);
    }
    // Continuous draws collide with probability zero; enforce anyway.
    std::vector<double> xs = x, ys = y;
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    if (std::adjacent_find(xs.begin(), xs.end()) != xs.end()) continue;
    if (std::adjacent_find(ys.begin(), ys.end()) != ys.end()) continue;
    CHECK(spearman(x, y) == doctest::Approx(oracle::spearman_closed_form(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("spearman is invariant under strictly increasing transforms") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.bounded(20);
    std::vector<double> x(n), y(n), fx(n), gy(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform(-4, 4);
      y[i] = rng.uniform(-4, 4);
      fx[i] = std::exp(0.5 * x[i]) + 3.0;             // strictly increasing
      gy[i] = std::atan(y[i]) * 2.0 - 1.0;            // strictly increasing
    }
    CHECK(spearman(x, y) == doctest::Approx(spearman(fx, gy)).epsilon(1e-12));
  }
}

TEST_CASE("evaluate with scores equal to negated ki is a perfect inverse ranking") {
  const Dataset ds = eval_dataset(60, 5);
  std::vector<double> scores;
  for (const auto& r : ds.records) scores.push_back(-*r.ki);
  const EvalReport report = evaluate(ds, scores, ds, 10);
  CHECK(report.spearman_overall == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(report.n_eval == 60);
}

TEST_CASE("evaluate top-k at full size reproduces the base rate") {
  const Dataset ds = eval_dataset(80, 6);
  std::vector<double> scores;
  Rng rng(7);
  for (std::size_t i = 0; i < ds.size(); ++i) scores.push_back(rng.uniform(0, 1));
  const EvalReport report = evaluate(ds, scores, ds, ds.size());
  double base = 0.0;
  for (const auto& r : ds.records) base += r.activity;
  base /= static_cast<double>(ds.size());
  CHECK(report.top_k.fraction_active == doctest::Approx(base).epsilon(1e-12));
  CHECK(report.top_k.ki_quartiles[0] <= report.top_k.ki_quartiles[1]);
  CHECK(report.top_k.ki_quartiles[1] <= report.top_k.ki_quartiles[2]);
}

TEST_CASE("evaluate is independent of record order") {
  const Dataset ds = eval_dataset(50, 8);
  std::vector<double> scores;
  Rng rng(9);
  for (std::size_t i = 0; i < ds.size(); ++i) scores.push_back(rng.uniform(0, 1));
  const EvalReport base = evaluate(ds, scores, ds, 7);

  // Rotate records and scores together.
  Dataset rotated = ds;
  std::rotate(rotated.records.begin(), rotated.records.begin() + 13, rotated.records.end());
  std::vector<double> rotated_scores = scores;
  std::rotate(rotated_scores.begin(), rotated_scores.begin() + 13, rotated_scores.end());

  const EvalReport moved = evaluate(rotated, rotated_scores, ds, 7);
  CHECK(moved.spearman_overall == doctest::Approx(base.spearman_overall).epsilon(1e-12));
  CHECK(moved.top_k.fraction_active == base.top_k.fraction_active);
  CHECK(moved.top_k.ki_quartiles[1] == doctest::Approx(base.top_k.ki_quartiles[1]).epsilon(1e-12));
}

TEST_CASE("evaluate validates its preconditions") {
  Dataset ds = eval_dataset(10, 10);
  std::vector<double> scores(10, 0.5);
  scores[0] = 1.0;
  CHECK_THROWS_AS(evaluate(ds, scores, ds, 11), std::invalid_argument);
  CHECK_THROWS_AS(evaluate(ds, std::vector<double>(9, 0.1), ds, 5), std::invalid_argument);

  ds.records[3].ki.reset();
  CHECK_THROWS_AS(evaluate(ds, scores, ds, 5), std::invalid_argument);
}

TEST_CASE("rankings csv is sorted and complete") {
  const Dataset ds = eval_dataset(25, 11);
  std::vector<double> scores;
  Rng rng(12);
  for (std::size_t i = 0; i < ds.size(); ++i) scores.push_back(rng.uniform(0, 1));
  // Force a tie to exercise the id tiebreak.
  scores[3] = scores[17];

  write_rankings_csv("t_ranks.csv", ds, scores);
  std::ifstream is("t_ranks.csv");
  std::string header;
  std::getline(is, header);
  CHECK(header == "id,score,ki,rank");
  std::vector<double> read_scores;
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(is, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    ids.push_back(line.substr(0, c1));
    read_scores.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
  }
  CHECK(read_scores.size() == ds.size());
  for (std::size_t i = 1; i < read_scores.size(); ++i) {
    CHECK(read_scores[i - 1] >= read_scores[i]);
    if (read_scores[i - 1] == read_scores[i]) CHECK(ids[i - 1] < ids[i]);
  }
  std::remove("t_ranks.csv");
}

TEST_CASE("eval report serializes to json") {
  const Dataset ds = eval_dataset(30, 13);
  std::vector<double> scores;
  for (const auto& r : ds.records) scores.push_back(-*r.ki);
  const EvalReport report = evaluate(ds, scores, ds, 5);
  const std::string json = eval_report_json(report);
  CHECK(json.find("spearman_overall") != std::string::npos);
  CHECK(json.find("fraction_active") != std::string::npos);
  CHECK(json.find("ki_quartiles") != std::string::npos);
}

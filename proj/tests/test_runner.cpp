#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "epigraph/runner.hpp"

using namespace epigraph;
namespace fs = std::filesystem;

namespace {

// Quantile by the textbook definition: position q(n-1) in the sorted
// sample, interpolated between neighbours.
double reference_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const double below = std::floor(pos);
  const double frac = pos - below;
  const auto i = static_cast<std::size_t>(below);
  if (i + 1 >= v.size()) return v.back();
  return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

ScenarioConfig tiny_scenario() {
  ScenarioConfig cfg = default_scenario(1500);
  cfg.horizon = 40;
  cfg.replications = 4;
  cfg.initial_infections = 10;
  cfg.model.interventions.quarantine.enabled = true;
  cfg.model.interventions.testing.enabled = true;
  cfg.model.interventions.vaccination.enabled = true;
  return cfg;
}

std::string csv_of(const RunResult& r) {
  std::ostringstream out;
  write_run_csv(out, r);
  return out.str();
}

}  // namespace

TEST(Quantile, KnownValues) {
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.75), 3.25);
  EXPECT_DOUBLE_EQ(quantile({7}, 0.25), 7.0);
  EXPECT_THROW(quantile({}, 0.5), std::invalid_argument);
}

TEST(Quantile, MatchesReferenceOnRandomSamples) {
  const KeyedRng rng(12);
  for (std::uint32_t trial = 0; trial < 200; ++trial) {
    KeyedStream s(rng, trial, 0, Purpose::Test);
    const std::size_t n = 1 + s.below(30);
    std::vector<double> v(n);
    for (auto& x : v) x = std::floor(s.uniform() * 1000.0);
    for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      ASSERT_NEAR(quantile(v, q), reference_quantile(v, q), 1e-9) << "n=" << n << " q=" << q;
    }
  }
}

TEST(Runner, StepRowsAreConsistent) {
  const ScenarioConfig cfg = tiny_scenario();
  const auto results = run_scenario(cfg, 1);
  ASSERT_EQ(results.size(), 4u);
  for (const auto& r : results) {
    ASSERT_TRUE(r.ok()) << r.error;
    ASSERT_EQ(r.rows.size(), 40u);
    std::int64_t prev_cum = static_cast<std::int64_t>(cfg.initial_infections);
    for (const auto& row : r.rows) {
      std::int64_t total = 0;
      for (auto c : row.stage_counts) total += c;
      ASSERT_EQ(total, 1500);
      ASSERT_EQ(row.cumulative_infections, prev_cum + row.new_infections);
      ASSERT_EQ(row.stage_counts[index_of(Stage::Dead)], row.cumulative_deaths);
      const std::int64_t ever = 1500 - row.stage_counts[index_of(Stage::Susceptible)] -
                                row.stage_counts[index_of(Stage::Vaccinated)];
      ASSERT_EQ(row.cumulative_infections, ever);
      prev_cum = row.cumulative_infections;
    }
  }
  EXPECT_NE(csv_of(results[0]), csv_of(results[1]));
}

TEST(Runner, IdenticalAcrossThreadCounts) {
  const ScenarioConfig cfg = tiny_scenario();
  const auto one = run_scenario(cfg, 1);
  const auto three = run_scenario(cfg, 3);
  ASSERT_EQ(one.size(), three.size());
  for (std::size_t r = 0; r < one.size(); ++r) EXPECT_EQ(csv_of(one[r]), csv_of(three[r])) << "replication " << r;
}

TEST(Runner, CsvRoundTrip) {
  const ScenarioConfig cfg = tiny_scenario();
  const auto results = run_scenario(cfg, 1);
  const fs::path dir = fs::temp_directory_path() / "epigraph_runner_roundtrip";
  fs::remove_all(dir);
  write_results(dir, results);
  const auto back = read_results(dir);
  ASSERT_EQ(back.size(), results.size());
  for (std::size_t r = 0; r < back.size(); ++r) {
    EXPECT_EQ(back[r].replication, results[r].replication);
    EXPECT_EQ(back[r].seed, results[r].seed);
    EXPECT_EQ(csv_of(back[r]), csv_of(results[r]));
  }
  std::ofstream(dir / "run_999.csv") << "not a run file\n";
  EXPECT_THROW(read_results(dir), ConfigError);
  fs::remove_all(dir);
}

TEST(Runner, SummaryQuartiles) {
  std::vector<RunResult> results(5);
  for (int r = 0; r < 5; ++r) {
    results[r].replication = r;
    StepRow row;
    row.step = 1;
    row.cumulative_infections = (r + 1) * 10;
    results[r].rows.push_back(row);
  }
  results[4].error = "aborted";
  const Summary s = summarize(results);
  EXPECT_EQ(s.replications, 4u);
  const Quartiles q = s.final("cumulative_infections");
  EXPECT_DOUBLE_EQ(q.median, 25.0);
  EXPECT_DOUBLE_EQ(q.q25, 17.5);
  EXPECT_DOUBLE_EQ(q.q75, 32.5);
  std::ostringstream wide, lng;
  write_summary_csv(wide, s);
  write_summary_long(lng, s);
  EXPECT_NE(wide.str().find("cumulative_infections_median"), std::string::npos);
  EXPECT_NE(lng.str().find("1,cumulative_infections,median,25\n"), std::string::npos);
}

TEST(Runner, SeedsChangeTrajectories) {
  ScenarioConfig a = tiny_scenario();
  a.replications = 1;
  ScenarioConfig b = a;
  b.base_seed = 2;
  EXPECT_EQ(csv_of(run_scenario(a)[0]), csv_of(run_scenario(a)[0]));
  EXPECT_NE(csv_of(run_scenario(a)[0]), csv_of(run_scenario(b)[0]));
}

TEST(Scenario, ParseErrorsAndOverrides) {
  const fs::path dir = fs::temp_directory_path() / "epigraph_scenario_test";
  fs::create_directories(dir);
  const auto write = [&](const Json& j) {
    std::ofstream(dir / "s.json") << j.dump();
    return dir / "s.json";
  };
  Json j = {{"population", (data_dir() / "population_default.json").string()},
            {"disease", (data_dir() / "disease_params.json").string()},
            {"progression", (data_dir() / "progression_table.json").string()},
            {"overrides", {{"population", {{"n_agents", 321}}}, {"disease", {{"R", 2.5}}}}},
            {"replications", 3}};
  const ScenarioConfig c = load_scenario(write(j));
  EXPECT_EQ(c.population.n_agents, 321u);
  EXPECT_EQ(c.model.disease.R, 2.5);
  EXPECT_EQ(c.replications, 3);
  EXPECT_EQ(c.horizon, 180);
  EXPECT_EQ(c.initial_infections, 10u);

  j["horizon"] = 0;
  EXPECT_THROW(load_scenario(write(j)), ConfigError);
  j.erase("horizon");
  j["initial_infections"] = 1000;
  EXPECT_THROW(load_scenario(write(j)), ConfigError);
  j["initial_infections"] = 5;
  j["disease"] = "missing.json";
  EXPECT_THROW(load_scenario(write(j)), ConfigError);
  std::ofstream(dir / "s.json") << "{ not json";
  EXPECT_THROW(load_scenario(dir / "s.json"), ConfigError);
  fs::remove_all(dir);
}

TEST(Scenario, ShippedScenariosLoad) {
  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(data_dir() / "scenarios")) {
    EXPECT_NO_THROW(load_scenario(entry.path())) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 8u);
}

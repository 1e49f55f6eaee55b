#pragma once

// Seeded replications, per-step time series, quartile summaries and the
// throughput benchmark.

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "epigraph/engine.hpp"
#include "epigraph/graph.hpp"
#include "epigraph/oracle.hpp"
#include "epigraph/population.hpp"
#include "epigraph/rng.hpp"
#include "epigraph/scenario.hpp"

namespace epigraph {

inline constexpr std::uint64_t kPopulationStream = 0xFFFFFFFFFFFFFFFFull;

struct StepRow {
  Step step = 0;
  std::array<std::int64_t, kStages> stage_counts{};
  std::int64_t cumulative_infections = 0;
  std::int64_t cumulative_deaths = 0;
  std::int64_t hospitalized_icu = 0;
  std::int64_t tests = 0;
  std::int64_t doses = 0;
  std::int64_t new_infections = 0;
  std::int64_t interactions = 0;
};

struct RunResult {
  int replication = 0;
  std::uint64_t seed = 0;
  std::vector<StepRow> rows;
  std::string error;  // set when the replication was aborted

  bool ok() const noexcept { return error.empty(); }
  std::int64_t total_interactions() const noexcept {
    std::int64_t n = 0;
    for (const auto& r : rows) n += r.interactions;
    return n;
  }
};

// Columns after `step`, in file order.
inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v(kStageNames.begin(), kStageNames.end());
    for (const char* m : {"cumulative_infections", "cumulative_deaths", "hospitalized_icu", "tests", "doses",
                          "new_infections", "interactions"}) {
      v.emplace_back(m);
    }
    return v;
  }();
  return names;
}

inline std::vector<std::int64_t> metric_values(const StepRow& r) {
  std::vector<std::int64_t> v(r.stage_counts.begin(), r.stage_counts.end());
  v.insert(v.end(), {r.cumulative_infections, r.cumulative_deaths, r.hospitalized_icu, r.tests, r.doses,
                     r.new_infections, r.interactions});
  return v;
}

inline std::size_t metric_index(const std::string& name) {
  const auto& names = metric_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::invalid_argument("unknown metric " + name);
  return static_cast<std::size_t>(it - names.begin());
}

// Static population shared by all replications of a scenario.
struct PreparedPopulation {
  AgentColumns initial;
  PopulationNetworks networks;
};

inline PreparedPopulation prepare_population(const ScenarioConfig& cfg) {
  PreparedPopulation p;
  p.initial = synthesize(cfg.population, KeyedRng(derive_seed(cfg.base_seed, kPopulationStream)));
  p.networks = PopulationNetworks::from_state(p.initial);
  return p;
}

// Replication start state: app holders assigned and infections seeded at
// step 0.
inline AgentColumns initial_state(const ScenarioConfig& cfg, const PreparedPopulation& pop, const KeyedRng& rng) {
  AgentColumns st = pop.initial;
  if (cfg.model.interventions.den.enabled) assign_den_apps(st, cfg.model.interventions.den.app_adoption, rng);
  seed_infections(st, cfg.initial_infections, cfg.model.progression, rng, 0);
  return st;
}

// Optional per-step observer, e.g. for graph dumps.
using GraphObserver = std::function<void(const StepGraph&)>;

inline RunResult run_replication(const ScenarioConfig& cfg, const PreparedPopulation& pop,
                                 const std::shared_ptr<const ModelParams>& params, int replication,
                                 const GraphObserver& observe = {}) {
  RunResult result;
  result.replication = replication;
  result.seed = derive_seed(cfg.base_seed, static_cast<std::uint64_t>(replication));
  const KeyedRng rng(result.seed);
  try {
    Engine engine(initial_state(cfg, pop, rng), params, result.seed);
    engine.set_audit(cfg.audit);
    const auto n = static_cast<std::int64_t>(engine.state().size());
    std::int64_t cumulative = static_cast<std::int64_t>(cfg.initial_infections);
    std::int64_t deaths = 0;
    result.rows.reserve(static_cast<std::size_t>(cfg.horizon));
    for (Step t = 1; t <= cfg.horizon; ++t) {
      const StepGraph graph = realize_step_graph(pop.networks, engine.state(), cfg.networks, rng, t);
      if (observe) observe(graph);
      const StepEvents ev = engine.step(graph);
      StepRow row;
      row.step = t;
      row.stage_counts = engine.state().stage_counts();
      cumulative += ev.new_infections;
      deaths += ev.deaths;
      row.cumulative_infections = cumulative;
      row.cumulative_deaths = deaths;
      row.hospitalized_icu = row.stage_counts[index_of(Stage::Hospitalized)] +
                             row.stage_counts[index_of(Stage::CriticalICU)];
      row.tests = ev.tests;
      row.doses = ev.first_doses + ev.second_doses;
      row.new_infections = ev.new_infections;
      row.interactions = ev.interactions;
      std::int64_t total = 0;
      for (auto c : row.stage_counts) total += c;
      if (total != n) throw InvariantViolation("stage counts do not sum to the population");
      if (row.stage_counts[index_of(Stage::Dead)] != deaths) {
        throw InvariantViolation("dead count disagrees with cumulative deaths");
      }
      result.rows.push_back(row);
    }
  } catch (const InvariantViolation& e) {
    result.error = e.what();
  }
  return result;
}

// Runs every replication; output order and content do not depend on
// `threads`.
inline std::vector<RunResult> run_scenario(const ScenarioConfig& cfg, unsigned threads = 1,
                                           const std::function<GraphObserver(int)>& observer_for = {}) {
  const PreparedPopulation pop = prepare_population(cfg);
  const auto params = std::make_shared<const ModelParams>(cfg.model);
  std::vector<RunResult> results(static_cast<std::size_t>(cfg.replications));
  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int r = next++; r < cfg.replications; r = next++) {
      results[static_cast<std::size_t>(r)] =
          run_replication(cfg, pop, params, r, observer_for ? observer_for(r) : GraphObserver{});
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cfg.replications)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  return results;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kRunSchema = "# epigraph-run v1";
inline constexpr const char* kSummarySchema = "# epigraph-summary v1";

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_run_csv(std::ostream& out, const RunResult& r) {
  out << kRunSchema << " replication=" << r.replication << " seed=" << r.seed << '\n';
  out << "step";
  for (const auto& m : metric_names()) out << ',' << m;
  out << '\n';
  for (const auto& row : r.rows) {
    out << row.step;
    for (auto v : metric_values(row)) out << ',' << v;
    out << '\n';
  }
}

inline RunResult read_run_csv(std::istream& in) {
  RunResult r;
  std::string line;
  if (!std::getline(in, line) || line.rfind(kRunSchema, 0) != 0) {
    throw ConfigError("not an epigraph run file (missing '" + std::string(kRunSchema) + "' header)");
  }
  std::istringstream meta(line.substr(std::string(kRunSchema).size()));
  std::string token;
  while (meta >> token) {
    if (token.rfind("replication=", 0) == 0) r.replication = std::stoi(token.substr(12));
    if (token.rfind("seed=", 0) == 0) r.seed = std::stoull(token.substr(5));
  }
  std::getline(in, line);  // column header
  const std::size_t n_metrics = metric_names().size();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    std::vector<std::int64_t> values;
    while (std::getline(cells, cell, ',')) values.push_back(std::stoll(cell));
    if (values.size() != n_metrics + 1) throw ConfigError("run file row has the wrong number of columns");
    StepRow row;
    row.step = static_cast<Step>(values[0]);
    for (int s = 0; s < kStages; ++s) row.stage_counts[s] = values[1 + s];
    std::size_t k = 1 + kStages;
    row.cumulative_infections = values[k++];
    row.cumulative_deaths = values[k++];
    row.hospitalized_icu = values[k++];
    row.tests = values[k++];
    row.doses = values[k++];
    row.new_infections = values[k++];
    row.interactions = values[k++];
    r.rows.push_back(row);
  }
  return r;
}

inline std::string run_file_name(int replication) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%03d.csv", replication);
  return buf;
}

inline void write_results(const std::filesystem::path& dir, const std::vector<RunResult>& results) {
  std::filesystem::create_directories(dir);
  for (const auto& r : results) {
    if (!r.ok()) continue;
    std::ofstream out(dir / run_file_name(r.replication), std::ios::binary);
    write_run_csv(out, r);
  }
}

inline std::vector<RunResult> read_results(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("run_", 0) == 0 && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunResult> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    try {
      out.push_back(read_run_csv(in));
    } catch (const ConfigError& e) {
      throw ConfigError(f.string() + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Summaries

// Linear-interpolation quantile (numpy's default) of unsorted values.
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct Quartiles {
  double q25 = 0, median = 0, q75 = 0;
};

struct Summary {
  std::vector<Step> steps;
  // [step][metric]
  std::vector<std::vector<Quartiles>> values;
  std::size_t replications = 0;

  const Quartiles& at(std::size_t step_index, const std::string& metric) const {
    return values.at(step_index).at(metric_index(metric));
  }
  const Quartiles& final(const std::string& metric) const { return at(steps.size() - 1, metric); }
};

inline Summary summarize(const std::vector<RunResult>& results) {
  std::vector<const RunResult*> ok;
  for (const auto& r : results) {
    if (r.ok()) ok.push_back(&r);
  }
  if (ok.empty()) throw std::invalid_argument("summarize: no completed replications");
  Summary s;
  s.replications = ok.size();
  const std::size_t n_steps = ok.front()->rows.size();
  for (const auto* r : ok) {
    if (r->rows.size() != n_steps) throw std::invalid_argument("summarize: replications differ in length");
  }
  const std::size_t n_metrics = metric_names().size();
  for (std::size_t t = 0; t < n_steps; ++t) {
    s.steps.push_back(ok.front()->rows[t].step);
    std::vector<std::vector<double>> column(n_metrics);
    for (const auto* r : ok) {
      const auto v = metric_values(r->rows[t]);
      for (std::size_t m = 0; m < n_metrics; ++m) column[m].push_back(static_cast<double>(v[m]));
    }
    std::vector<Quartiles> qs;
    for (auto& c : column) qs.push_back({quantile(c, 0.25), quantile(c, 0.5), quantile(c, 0.75)});
    s.values.push_back(std::move(qs));
  }
  return s;
}

inline void write_summary_csv(std::ostream& out, const Summary& s) {
  out << kSummarySchema << " replications=" << s.replications << '\n';
  out << "step";
  for (const auto& m : metric_names()) out << ',' << m << "_q25," << m << "_median," << m << "_q75";
  out << '\n';
  for (std::size_t t = 0; t < s.steps.size(); ++t) {
    out << s.steps[t];
    for (const auto& q : s.values[t]) {
      out << ',' << format_number(q.q25) << ',' << format_number(q.median) << ',' << format_number(q.q75);
    }
    out << '\n';
  }
}

// One row per (step, metric, statistic) for plotting tools.
inline void write_summary_long(std::ostream& out, const Summary& s) {
  out << "step,metric,statistic,value\n";
  const auto& names = metric_names();
  for (std::size_t t = 0; t < s.steps.size(); ++t) {
    for (std::size_t m = 0; m < names.size(); ++m) {
      const auto& q = s.values[t][m];
      out << s.steps[t] << ',' << names[m] << ",q25," << format_number(q.q25) << '\n';
      out << s.steps[t] << ',' << names[m] << ",median," << format_number(q.median) << '\n';
      out << s.steps[t] << ',' << names[m] << ",q75," << format_number(q.q75) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchReport {
  std::size_t n_agents = 0;
  Step steps = 0;
  std::int64_t interactions = 0;  // directed edges evaluated by the gather
  double step_seconds = 0.0;      // engine (or oracle) step only
  double total_seconds = 0.0;     // including graph construction
  double interactions_per_second() const noexcept {
    return total_seconds > 0.0 ? static_cast<double>(interactions) / total_seconds : 0.0;
  }
  double step_interactions_per_second() const noexcept {
    return step_seconds > 0.0 ? static_cast<double>(interactions) / step_seconds : 0.0;
  }
};

// Single-context run of `cfg` for `steps` steps, timing the engine or the
// reference oracle.
inline BenchReport bench(const ScenarioConfig& cfg, Step steps, bool use_oracle = false, int replication = 0) {
  using Clock = std::chrono::steady_clock;
  BenchReport rep;
  rep.n_agents = cfg.population.n_agents;
  rep.steps = steps;
  const auto start = Clock::now();
  const PreparedPopulation pop = prepare_population(cfg);
  const auto params = std::make_shared<const ModelParams>(cfg.model);
  const std::uint64_t seed = derive_seed(cfg.base_seed, static_cast<std::uint64_t>(replication));
  const KeyedRng rng(seed);
  AgentColumns st = initial_state(cfg, pop, rng);
  Clock::duration stepping{};
  if (use_oracle) {
    OracleSim oracle(st, cfg.model, seed);
    AgentColumns view = st;  // alive mask for the graph builder
    for (Step t = 1; t <= steps; ++t) {
      const StepGraph g = realize_step_graph(pop.networks, view, cfg.networks, rng, t);
      const auto t0 = Clock::now();
      rep.interactions += oracle.step(g).interactions;
      stepping += Clock::now() - t0;
      for (AgentId i = 0; i < view.size(); ++i) view.disease_stage[i] = oracle.agents()[i].stage;
    }
  } else {
    Engine engine(std::move(st), params, seed);
    for (Step t = 1; t <= steps; ++t) {
      const StepGraph g = realize_step_graph(pop.networks, engine.state(), cfg.networks, rng, t);
      const auto t0 = Clock::now();
      rep.interactions += engine.step(g).interactions;
      stepping += Clock::now() - t0;
    }
  }
  rep.step_seconds = std::chrono::duration<double>(stepping).count();
  rep.total_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return rep;
}

// ---------------------------------------------------------------------------
// Engine vs. oracle replay

struct VerifyReport {
  bool equal = true;
  Step steps = 0;
  Step divergence_step = 0;  // 0 means the initial state
  AgentId divergence_agent = 0;
  std::string divergence_field;
  std::string event_mismatch;
};

// Runs the engine and the replay-mode oracle on the same graphs and draws,
// comparing every agent field after each step. `oracle_R_scale` perturbs the
// oracle's copy of R to exercise the checker.
inline VerifyReport verify(const ScenarioConfig& cfg, double oracle_R_scale = 1.0) {
  if (cfg.population.n_agents > 2000) throw ConfigError("verify: scenario must have at most 2000 agents");
  VerifyReport rep;
  const PreparedPopulation pop = prepare_population(cfg);
  const auto params = std::make_shared<const ModelParams>(cfg.model);
  const std::uint64_t seed = derive_seed(cfg.base_seed, 0);
  const KeyedRng rng(seed);
  const AgentColumns st = initial_state(cfg, pop, rng);
  ModelParams oracle_params = cfg.model;
  if (oracle_R_scale != 1.0) {
    oracle_params.disease.R *= oracle_R_scale;
    oracle_params.disease.finalize();
  }
  Engine engine(st, params, seed);
  engine.set_audit(true);
  OracleSim oracle(st, oracle_params, seed);
  const auto record = [&](Step t, const std::optional<Divergence>& d) {
    rep.equal = false;
    rep.divergence_step = t;
    if (d) {
      rep.divergence_agent = d->agent;
      rep.divergence_field = d->field;
    }
  };
  if (auto d = first_difference(engine.state(), oracle.agents())) {
    record(0, d);
    return rep;
  }
  for (Step t = 1; t <= cfg.horizon; ++t) {
    const StepGraph g = realize_step_graph(pop.networks, engine.state(), cfg.networks, rng, t);
    const StepEvents a = engine.step(g);
    const StepEvents b = oracle.step(g);
    rep.steps = t;
    if (auto d = first_difference(engine.state(), oracle.agents())) {
      record(t, d);
      return rep;
    }
    if (a.new_infections != b.new_infections || a.deaths != b.deaths || a.tests != b.tests ||
        a.notifications != b.notifications || a.first_doses != b.first_doses || a.second_doses != b.second_doses ||
        a.quarantines != b.quarantines) {
      record(t, std::nullopt);
      rep.event_mismatch = "step events differ";
      return rep;
    }
  }
  return rep;
}

}  // namespace epigraph

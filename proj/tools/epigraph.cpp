#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "epigraph/epigraph.hpp"

namespace fs = std::filesystem;
using namespace epigraph;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInvariant = 2;
constexpr int kExitDivergence = 3;

struct Overrides {
  std::optional<int> replications;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> agents;
  std::optional<int> horizon;
  bool audit = false;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--replications", o.replications, "Number of replications");
  cmd->add_option("--seed", o.seed, "Base seed");
  cmd->add_option("--agents", o.agents, "Override the population size");
  cmd->add_option("--horizon", o.horizon, "Override the number of steps");
  cmd->add_flag("--audit", o.audit, "Check transitions and invariants every step");
}

ScenarioConfig load_with(const std::string& path, const Overrides& o) {
  ScenarioConfig cfg = load_scenario(path);
  if (o.replications) {
    if (*o.replications < 1) throw ConfigError("--replications must be >= 1");
    cfg.replications = *o.replications;
  }
  if (o.seed) cfg.base_seed = *o.seed;
  if (o.agents) cfg.population.n_agents = *o.agents;
  if (o.horizon) {
    if (*o.horizon < 1) throw ConfigError("--horizon must be >= 1");
    cfg.horizon = *o.horizon;
  }
  if (cfg.initial_infections > cfg.population.n_agents) {
    throw ConfigError("initial_infections exceeds population size");
  }
  cfg.audit = cfg.audit || o.audit;
  return cfg;
}

int report_failures(const std::vector<RunResult>& results) {
  int status = kExitOk;
  for (const auto& r : results) {
    if (!r.ok()) {
      std::cerr << "replication " << r.replication << ": invariant violation: " << r.error << '\n';
      status = kExitInvariant;
    }
  }
  return status;
}

void print_final(const std::string& label, const Summary& s) {
  const auto inf = s.final("cumulative_infections");
  const auto dead = s.final("cumulative_deaths");
  std::printf("%-28s infections %10.1f [%10.1f, %10.1f]  deaths %8.1f [%8.1f, %8.1f]\n", label.c_str(), inf.median,
              inf.q25, inf.q75, dead.median, dead.q25, dead.q75);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Agent-based epidemic simulator over per-step interaction graphs"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run seeded replications of a scenario");
  std::string sim_scenario, sim_out, dump_dir;
  unsigned sim_threads = 1;
  Overrides sim_o;
  sim->add_option("--scenario", sim_scenario, "Scenario JSON file")->required();
  sim->add_option("--out", sim_out, "Output directory for per-replication CSV files")->required();
  sim->add_option("--threads", sim_threads, "Concurrent replications")->check(CLI::PositiveNumber);
  sim->add_option("--dump-graphs", dump_dir, "Debug: write replication 0 step graphs as CSV into this directory");
  add_overrides(sim, sim_o);

  // summarize
  auto* sum = app.add_subcommand("summarize", "Quartiles across replications per step");
  std::string sum_in, sum_out, sum_long;
  sum->add_option("--in", sum_in, "Directory written by simulate")->required();
  sum->add_option("--out", sum_out, "Wide summary CSV")->required();
  sum->add_option("--long", sum_long, "Also write a long-format CSV");

  // bench
  auto* ben = app.add_subcommand("bench", "Single-context throughput on the default networks");
  std::size_t ben_agents = 100000;
  int ben_steps = 180;
  bool ben_oracle = false;
  std::uint64_t ben_seed = 1;
  ben->add_option("--agents", ben_agents, "Population size");
  ben->add_option("--steps", ben_steps, "Steps")->check(CLI::PositiveNumber);
  ben->add_option("--seed", ben_seed, "Base seed");
  ben->add_flag("--oracle", ben_oracle, "Also time the reference oracle and report the speedup");

  // verify
  auto* ver = app.add_subcommand("verify", "Replay the engine against the reference oracle");
  std::string ver_scenario;
  double ver_perturb = 1.0;
  Overrides ver_o;
  ver->add_option("--scenario", ver_scenario, "Scenario JSON file (at most 2000 agents)")->required();
  ver->add_option("--perturb-R", ver_perturb, "Scale the oracle's R to demonstrate divergence detection");
  add_overrides(ver, ver_o);

  // compare
  auto* cmp = app.add_subcommand("compare", "Final-step quartiles for several scenarios");
  std::vector<std::string> cmp_scenarios;
  unsigned cmp_threads = 1;
  Overrides cmp_o;
  cmp->add_option("--scenarios", cmp_scenarios, "Scenario JSON files")->required();
  cmp->add_option("--threads", cmp_threads, "Concurrent replications")->check(CLI::PositiveNumber);
  add_overrides(cmp, cmp_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*sim) {
      const ScenarioConfig cfg = load_with(sim_scenario, sim_o);
      std::function<GraphObserver(int)> observers;
      if (!dump_dir.empty()) {
        fs::create_directories(dump_dir);
        observers = [&](int r) -> GraphObserver {
          if (r != 0) return {};
          return [&](const StepGraph& g) {
            char name[32];
            std::snprintf(name, sizeof name, "graph_%04d.csv", g.step);
            std::ofstream out(fs::path(dump_dir) / name, std::ios::binary);
            write_graph_csv(out, g);
          };
        };
      }
      const auto results = run_scenario(cfg, sim_threads, observers);
      write_results(sim_out, results);
      std::cout << "wrote " << results.size() << " replications of '" << cfg.name << "' to " << sim_out << '\n';
      return report_failures(results);
    }
    if (*sum) {
      const auto results = read_results(sum_in);
      if (results.empty()) throw ConfigError("no run_*.csv files in " + sum_in);
      const Summary s = summarize(results);
      {
        std::ofstream out(sum_out, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + sum_out);
        write_summary_csv(out, s);
      }
      if (!sum_long.empty()) {
        std::ofstream out(sum_long, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + sum_long);
        write_summary_long(out, s);
      }
      print_final(fs::path(sum_in).filename().string(), s);
      return kExitOk;
    }
    if (*ben) {
      ScenarioConfig cfg = default_scenario(ben_agents);
      cfg.base_seed = ben_seed;
      const BenchReport r = bench(cfg, ben_steps, false);
      std::printf("agents %zu steps %d interactions %lld (%.3g)\n", r.n_agents, r.steps,
                  static_cast<long long>(r.interactions), static_cast<double>(r.interactions));
      std::printf("engine: total %.3f s, step %.3f s, %.3g interactions/s\n", r.total_seconds, r.step_seconds,
                  r.interactions_per_second());
      if (ben_oracle) {
        const BenchReport o = bench(cfg, ben_steps, true);
        std::printf("oracle: total %.3f s, step %.3f s, %.3g interactions/s\n", o.total_seconds, o.step_seconds,
                    o.interactions_per_second());
        std::printf("speedup (step time): %.2fx\n", o.step_seconds / r.step_seconds);
      }
      return kExitOk;
    }
    if (*ver) {
      const ScenarioConfig cfg = load_with(ver_scenario, ver_o);
      const VerifyReport r = verify(cfg, ver_perturb);
      if (r.equal) {
        std::cout << "identical: " << cfg.population.n_agents << " agents, " << r.steps << " steps\n";
        return kExitOk;
      }
      std::cout << "divergence at step " << r.divergence_step;
      if (!r.divergence_field.empty()) {
        std::cout << ", agent " << r.divergence_agent << ", field " << r.divergence_field;
      } else {
        std::cout << ": " << r.event_mismatch;
      }
      std::cout << '\n';
      return kExitDivergence;
    }
    if (*cmp) {
      int status = kExitOk;
      for (const auto& path : cmp_scenarios) {
        const ScenarioConfig cfg = load_with(path, cmp_o);
        const auto results = run_scenario(cfg, cmp_threads);
        if (const int s = report_failures(results); s != kExitOk) {
          status = s;
          continue;
        }
        print_final(cfg.name, summarize(results));
      }
      return status;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

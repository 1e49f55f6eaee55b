#pragma once

// Scenario files tie together a population spec, disease parameters, a
// progression table and the intervention block. Each of the first three may
// be given inline or as a path relative to the scenario file; `overrides`
// is merged into them (RFC 7386 merge patch) before validation.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "epigraph/engine.hpp"
#include "epigraph/graph.hpp"
#include "epigraph/interventions.hpp"
#include "epigraph/json_util.hpp"
#include "epigraph/population.hpp"
#include "epigraph/progression.hpp"
#include "epigraph/transmission.hpp"

#ifndef EPIGRAPH_DATA_DIR
#define EPIGRAPH_DATA_DIR "data"
#endif

namespace epigraph {

struct ScenarioConfig {
  std::string name = "scenario";
  PopulationSpec population;
  NetworkConfig networks;
  ModelParams model;
  Step horizon = 180;
  int replications = 15;
  std::uint64_t base_seed = 1;
  std::size_t initial_infections = 10;
  // Checks stage transitions and state invariants every step.
  bool audit = false;
};

// Directory holding the shipped parameter files. EPIGRAPH_DATA overrides
// the compiled-in location.
inline std::filesystem::path data_dir() {
  if (const char* env = std::getenv("EPIGRAPH_DATA")) return env;
  return EPIGRAPH_DATA_DIR;
}

inline NetworkConfig parse_network_config(const JsonField& j) {
  NetworkConfig n;
  const auto k = j["occupation_mean_interactions"].numbers(kOccupations, 0.0);
  std::copy(k.begin(), k.end(), n.occupation_mean_interactions.begin());
  n.occupation_rewire_prob = probability_or(j, "occupation_rewire_prob", 0.1);
  return n;
}

namespace detail {

inline Json resolve_section(const Json& scenario, const char* key, const std::filesystem::path& base) {
  Json section;
  if (!scenario.contains(key)) {
    throw ConfigError(std::string("scenario.") + key + ": missing required field");
  }
  const Json& ref = scenario.at(key);
  if (ref.is_string()) {
    std::filesystem::path p = ref.get<std::string>();
    if (p.is_relative()) p = base / p;
    section = load_json_file(p);
  } else if (ref.is_object()) {
    section = ref;
  } else {
    throw ConfigError(std::string("scenario.") + key + ": expected a file path or an object");
  }
  if (scenario.contains("overrides") && scenario["overrides"].contains(key)) {
    section.merge_patch(scenario["overrides"][key]);
  }
  return section;
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const Json& doc, const std::filesystem::path& base_dir) {
  const JsonField j(doc, "scenario");
  if (!doc.is_object()) j.fail("expected an object");
  ScenarioConfig c;
  c.name = string_or(j, "name", "scenario");

  const Json pop = detail::resolve_section(doc, "population", base_dir);
  c.population = parse_population_spec(JsonField(pop, "population"));
  c.networks = parse_network_config(JsonField(pop, "population"));
  const Json disease = detail::resolve_section(doc, "disease", base_dir);
  c.model.disease = parse_disease_params(JsonField(disease, "disease"));
  const Json progression = detail::resolve_section(doc, "progression", base_dir);
  c.model.progression = parse_progression_table(JsonField(progression, "progression"));
  if (j.has("interventions")) c.model.interventions = parse_interventions(j["interventions"]);

  c.horizon = static_cast<Step>(integer_or(j, "horizon", 180));
  if (c.horizon < 1) j["horizon"].fail("must be >= 1");
  c.replications = static_cast<int>(integer_or(j, "replications", 15));
  if (c.replications < 1) j["replications"].fail("must be >= 1");
  const long long seed = integer_or(j, "base_seed", 1);
  c.base_seed = static_cast<std::uint64_t>(seed);
  const long long seeds = integer_or(j, "initial_infections", 10);
  if (seeds < 0) j["initial_infections"].fail("must be >= 0");
  c.initial_infections = static_cast<std::size_t>(seeds);
  if (c.initial_infections > c.population.n_agents) {
    j["initial_infections"].fail("exceeds population size");
  }
  c.audit = boolean_or(j, "audit", false);
  return c;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
  return parse_scenario(load_json_file(path), path.parent_path());
}

// The shipped baseline: default population, disease and progression files,
// no interventions.
inline ScenarioConfig default_scenario(std::size_t n_agents) {
  Json doc = {{"name", "default"},
              {"population", "population_default.json"},
              {"disease", "disease_params.json"},
              {"progression", "progression_table.json"},
              {"overrides", {{"population", {{"n_agents", n_agents}}}}}};
  return parse_scenario(doc, data_dir());
}

}  // namespace epigraph

#pragma once

// Synthetic population: ages, households, occupations and random-interaction
// degrees drawn from configurable distributions.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "epigraph/json_util.hpp"
#include "epigraph/progression.hpp"
#include "epigraph/rng.hpp"
#include "epigraph/state.hpp"
#include "epigraph/types.hpp"

namespace epigraph {

struct PopulationSpec {
  std::size_t n_agents = 0;
  std::array<double, kAgeBands> age_distribution{};
  std::vector<double> household_size_distribution{1.0};  // sizes 1, 2, ...
  std::array<double, kOccupations> occupation_distribution{};
  // occupation_eligible[band][occ] for occupation id occ + 1
  std::array<std::array<bool, kOccupations>, kAgeBands> occupation_eligible{};
  std::array<double, kAgeBands> random_degree_by_age{};

  void validate() const {
    double mass = 0.0;
    for (double p : age_distribution) mass += p;
    if (std::abs(mass - 1.0) > 1e-9) throw ConfigError("population.age_distribution: must sum to 1");
    mass = 0.0;
    for (double p : household_size_distribution) mass += p;
    if (std::abs(mass - 1.0) > 1e-9) {
      throw ConfigError("population.household_size_distribution: must sum to 1");
    }
    for (int a = 0; a < kAgeBands; ++a) {
      if (age_distribution[a] <= 0.0) continue;
      double eligible = 0.0;
      for (int o = 0; o < kOccupations; ++o) {
        if (occupation_eligible[a][o]) eligible += occupation_distribution[o];
      }
      if (!(eligible > 0.0)) {
        throw ConfigError("population.occupation_age_eligibility[" + std::to_string(a) +
                          "]: no eligible occupation with positive probability");
      }
    }
  }
};

// Index of the category u falls into under probabilities p. Zero-mass
// categories are never returned.
inline std::size_t sample_categorical(std::span<const double> p, double u) {
  double total = 0.0;
  for (double v : p) total += v;
  const double target = u * total;
  double cumulative = 0.0;
  std::size_t last = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    cumulative += p[k];
    last = k;
    if (target < cumulative) return k;
  }
  return last;
}

inline PopulationSpec parse_population_spec(const JsonField& j) {
  PopulationSpec s;
  const long long n = j["n_agents"].integer();
  if (n < 0) j["n_agents"].fail("must be >= 0");
  s.n_agents = static_cast<std::size_t>(n);
  const auto age = j["age_distribution"].distribution(kAgeBands);
  std::copy(age.begin(), age.end(), s.age_distribution.begin());
  const JsonField hh = j["household_size_distribution"];
  if (hh.size() == 0) hh.fail("needs at least one size");
  s.household_size_distribution = hh.distribution(hh.size());
  const auto occ = j["occupation_distribution"].distribution(kOccupations);
  std::copy(occ.begin(), occ.end(), s.occupation_distribution.begin());
  const auto degree = j["random_degree_by_age"].numbers(kAgeBands, 0.0);
  std::copy(degree.begin(), degree.end(), s.random_degree_by_age.begin());

  if (j.has("occupation_age_eligibility")) {
    const JsonField elig = j["occupation_age_eligibility"];
    if (elig.size() != kAgeBands) elig.fail("expected one list per age band (9)");
    for (std::size_t a = 0; a < kAgeBands; ++a) {
      const JsonField band = elig[a];
      for (std::size_t k = 0; k < band.size(); ++k) {
        const long long id = band[k].integer();
        if (id < 1 || id > kOccupations) band[k].fail("occupation id must be in 1..23");
        s.occupation_eligible[a][static_cast<std::size_t>(id - 1)] = true;
      }
    }
  } else {
    for (auto& band : s.occupation_eligible) band.fill(true);
  }
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(j.path() + ": " + e.what());
  }
  return s;
}

// Static columns for a fresh population; every agent starts Susceptible.
inline AgentColumns synthesize(const PopulationSpec& spec, const KeyedRng& rng) {
  spec.validate();
  AgentColumns st(spec.n_agents);
  for (AgentId i = 0; i < st.size(); ++i) {
    const auto band = sample_categorical(spec.age_distribution, rng.uniform(0, i, Purpose::PopulationAge));
    st.age_group[i] = static_cast<std::uint8_t>(band);
    std::array<double, kOccupations> allowed{};
    for (int o = 0; o < kOccupations; ++o) {
      allowed[o] = spec.occupation_eligible[band][o] ? spec.occupation_distribution[o] : 0.0;
    }
    st.occupation[i] = static_cast<std::uint8_t>(
        1 + sample_categorical(allowed, rng.uniform(0, i, Purpose::PopulationOccupation)));
    st.random_degree[i] = spec.random_degree_by_age[band];
  }
  KeyedStream sizes(rng, 0, 0, Purpose::PopulationHousehold);
  std::uint32_t household = 0;
  for (AgentId next = 0; next < st.size(); ++household) {
    const std::size_t size = 1 + sample_categorical(spec.household_size_distribution, sizes.uniform());
    for (std::size_t k = 0; k < size && next < st.size(); ++k) st.household_id[next++] = household;
  }
  return st;
}

inline void assign_den_apps(AgentColumns& st, double adoption, const KeyedRng& rng) {
  for (AgentId i = 0; i < st.size(); ++i) {
    st.has_den_app[i] = rng.uniform(0, i, Purpose::AppAdoption) < adoption ? 1 : 0;
  }
}

// Infects `count` susceptible agents chosen uniformly at `step` (0 at start).
inline std::vector<AgentId> seed_infections(AgentColumns& st, std::size_t count, const ProgressionTable& table,
                                            const KeyedRng& rng, Step step = 0) {
  std::vector<AgentId> pool;
  for (AgentId i = 0; i < st.size(); ++i) {
    if (st.disease_stage[i] == Stage::Susceptible) pool.push_back(i);
  }
  if (count > pool.size()) {
    throw ConfigError("initial_infections (" + std::to_string(count) + ") exceeds the susceptible population (" +
                      std::to_string(pool.size()) + ")");
  }
  KeyedStream stream(rng, static_cast<std::uint32_t>(step), 0, Purpose::SeedInfections);
  for (std::size_t k = 0; k < count; ++k) {
    std::swap(pool[k], pool[k + stream.below(pool.size() - k)]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  for (AgentId i : pool) {
    const Stage stage =
        table.initial_stage(st.age_group[i], rng.uniform(static_cast<std::uint32_t>(step), i, Purpose::InfectionBranch));
    st.infected_at[i] = step;
    enter_stage(st, i, stage, step, table, rng);
  }
  return pool;
}

}  // namespace epigraph

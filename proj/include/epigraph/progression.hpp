#pragma once

// Within-host disease progression: age-stratified branch probabilities and
// sampled stage durations.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "epigraph/json_util.hpp"
#include "epigraph/rng.hpp"
#include "epigraph/state.hpp"
#include "epigraph/types.hpp"

namespace epigraph {

enum class DurationFamily : std::uint8_t { Constant, LogNormal, Gamma };

struct DurationDist {
  DurationFamily family = DurationFamily::Constant;
  double mean = 1.0;
  double sd = 0.0;

  // Inverse CDF in days, u in (0, 1).
  double quantile(double u) const {
    switch (family) {
      case DurationFamily::Constant:
        return mean;
      case DurationFamily::LogNormal: {
        const double s2 = std::log1p((sd * sd) / (mean * mean));
        const double mu = std::log(mean) - 0.5 * s2;
        const double z = -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
        return std::exp(mu + std::sqrt(s2) * z);
      }
      case DurationFamily::Gamma: {
        const double shape = (mean * mean) / (sd * sd);
        const double scale = (sd * sd) / mean;
        return boost::math::gamma_p_inv(shape, u) * scale;
      }
    }
    return mean;
  }

  // Whole steps, at least one.
  Step steps(double u) const {
    const double days = std::round(quantile(u));
    return days < 1.0 ? 1 : static_cast<Step>(days);
  }
};

struct Transition {
  Stage to = Stage::Recovered;
  std::array<double, kAgeBands> probability{};
  DurationDist duration;
};

constexpr bool is_legal_transition(Stage from, Stage to) noexcept {
  switch (from) {
    case Stage::Susceptible:
      return to == Stage::Asymptomatic || to == Stage::PresymptomaticMild ||
             to == Stage::PresymptomaticSevere;
    case Stage::Asymptomatic:
      return to == Stage::Recovered;
    case Stage::PresymptomaticMild:
      return to == Stage::MildSymptomatic;
    case Stage::PresymptomaticSevere:
      return to == Stage::SevereSymptomatic;
    case Stage::MildSymptomatic:
      return to == Stage::Recovered;
    case Stage::SevereSymptomatic:
      return to == Stage::Hospitalized || to == Stage::Recovered;
    case Stage::Hospitalized:
      return to == Stage::CriticalICU || to == Stage::Recovered;
    case Stage::CriticalICU:
      return to == Stage::Dead || to == Stage::Recovered;
    default:
      return false;
  }
}

struct ScheduledTransition {
  Stage next;
  Step delay;
};

class ProgressionTable {
 public:
  // Branches out of Susceptible on infection, in order
  // Asymptomatic, PresymptomaticMild, PresymptomaticSevere.
  std::array<std::array<double, 3>, kAgeBands> initial{};
  std::array<std::vector<Transition>, kStages> outgoing;

  const std::vector<Transition>& from(Stage s) const noexcept { return outgoing[index_of(s)]; }

  Stage initial_stage(int age_band, double u) const noexcept {
    static constexpr std::array<Stage, 3> kTargets = {
        Stage::Asymptomatic, Stage::PresymptomaticMild, Stage::PresymptomaticSevere};
    double cumulative = 0.0;
    for (int k = 0; k < 3; ++k) {
      cumulative += initial[age_band][k];
      if (u < cumulative) return kTargets[k];
    }
    // u beyond the rounded total: last branch with nonzero mass
    for (int k = 2; k >= 0; --k) {
      if (initial[age_band][k] > 0.0) return kTargets[k];
    }
    return Stage::Asymptomatic;
  }

  // Picks an outgoing edge of `from` with branch draw u_branch.
  const Transition& branch(Stage from, int age_band, double u_branch) const {
    const auto& edges = outgoing[index_of(from)];
    if (edges.empty()) {
      throw InvariantViolation("no progression out of stage " + std::string(name_of(from)));
    }
    double cumulative = 0.0;
    for (const auto& e : edges) {
      cumulative += e.probability[age_band];
      if (u_branch < cumulative) return e;
    }
    for (auto it = edges.rbegin(); it != edges.rend(); ++it) {
      if (it->probability[age_band] > 0.0) return *it;
    }
    return edges.back();
  }

  void validate() const {
    for (int a = 0; a < kAgeBands; ++a) {
      const double total = initial[a][0] + initial[a][1] + initial[a][2];
      if (std::abs(total - 1.0) > 1e-9) {
        throw ConfigError("progression.initial: probabilities for age band " + std::to_string(a) +
                          " sum to " + std::to_string(total));
      }
    }
    for (int s = 0; s < kStages; ++s) {
      const auto from = static_cast<Stage>(s);
      const auto& edges = outgoing[s];
      const bool needs_edges = is_infected(from);
      if (needs_edges && edges.empty()) {
        throw ConfigError("progression: stage " + std::string(name_of(from)) + " has no outgoing transitions");
      }
      if (!needs_edges && !edges.empty()) {
        throw ConfigError("progression: stage " + std::string(name_of(from)) + " cannot have scheduled transitions");
      }
      for (int a = 0; a < kAgeBands && !edges.empty(); ++a) {
        double total = 0.0;
        for (const auto& e : edges) total += e.probability[a];
        if (std::abs(total - 1.0) > 1e-9) {
          throw ConfigError("progression: transitions out of " + std::string(name_of(from)) +
                            " for age band " + std::to_string(a) + " sum to " + std::to_string(total));
        }
      }
    }
  }
};

inline DurationDist parse_duration(const JsonField& j) {
  DurationDist d;
  const std::string family = j["family"].string();
  d.mean = j["mean"].number();
  if (!(d.mean > 0.0)) j["mean"].fail("must be > 0");
  if (family == "constant") {
    d.family = DurationFamily::Constant;
  } else if (family == "lognormal" || family == "gamma") {
    d.family = family == "gamma" ? DurationFamily::Gamma : DurationFamily::LogNormal;
    d.sd = j["sd"].number();
    if (!(d.sd > 0.0)) j["sd"].fail("must be > 0");
  } else {
    j["family"].fail("unknown duration family '" + family + "' (constant, lognormal, gamma)");
  }
  return d;
}

inline ProgressionTable parse_progression_table(const JsonField& j) {
  ProgressionTable t;
  const JsonField init = j["initial"];
  const auto asym = init["asymptomatic"].scalar_or_numbers(kAgeBands, 0.0);
  const auto mild = init["presymptomatic_mild"].scalar_or_numbers(kAgeBands, 0.0);
  const auto severe = init["presymptomatic_severe"].scalar_or_numbers(kAgeBands, 0.0);
  for (int a = 0; a < kAgeBands; ++a) {
    t.initial[a] = {asym[a], mild[a], severe[a]};
    const double total = asym[a] + mild[a] + severe[a];
    if (std::abs(total - 1.0) > 1e-9) {
      init.fail("probabilities for age band " + std::to_string(a) + " sum to " + std::to_string(total));
    }
  }
  const JsonField list = j["transitions"];
  for (std::size_t i = 0; i < list.size(); ++i) {
    const JsonField e = list[i];
    const auto from = parse_stage(e["from"].string());
    const auto to = parse_stage(e["to"].string());
    if (!from) e["from"].fail("unknown stage");
    if (!to) e["to"].fail("unknown stage");
    if (*from == Stage::Susceptible || !is_legal_transition(*from, *to)) {
      e.fail("illegal transition " + e["from"].string() + " -> " + e["to"].string());
    }
    Transition tr;
    tr.to = *to;
    const auto p = e["probability"].scalar_or_numbers(kAgeBands, 0.0);
    for (int a = 0; a < kAgeBands; ++a) {
      if (p[a] > 1.0) e["probability"].fail("must be a probability in [0, 1]");
      tr.probability[a] = p[a];
    }
    tr.duration = parse_duration(e["duration"]);
    auto& bucket = t.outgoing[index_of(*from)];
    for (const auto& existing : bucket) {
      if (existing.to == tr.to) e.fail("duplicate transition");
    }
    bucket.push_back(tr);
  }
  try {
    t.validate();
  } catch (const ConfigError& err) {
    throw ConfigError(j.path() + ": " + err.what());
  }
  return t;
}

// Samples the next stage and its delay for `agent` leaving `current` at
// `step`.
inline ScheduledTransition schedule_transition(AgentId agent, Stage current, int age_band,
                                               const ProgressionTable& table, const KeyedRng& rng,
                                               Step step) {
  if (is_absorbing(current) || current == Stage::Susceptible) {
    throw InvariantViolation("schedule_transition: stage " + std::string(name_of(current)) +
                             " has no scheduled progression");
  }
  const auto s = static_cast<std::uint32_t>(step);
  const Transition& edge = table.branch(current, age_band, rng.uniform(s, agent, Purpose::ProgressionBranch));
  return {edge.to, edge.duration.steps(rng.uniform(s, agent, Purpose::ProgressionDelay))};
}

// Moves an agent into `stage` at `step` and schedules its next transition.
inline void enter_stage(AgentColumns& st, AgentId i, Stage stage, Step step,
                        const ProgressionTable& table, const KeyedRng& rng) {
  st.disease_stage[i] = stage;
  if (is_absorbing(stage)) {
    st.next_transition_at[i] = kNever;
    st.next_stage[i] = stage;
    return;
  }
  const auto next = schedule_transition(i, stage, st.age_group[i], table, rng, step);
  st.next_transition_at[i] = step + next.delay;
  st.next_stage[i] = next.next;
}

// Fires every transition scheduled for `step`. Agents entering a symptomatic
// stage are appended to `newly_symptomatic` in id order.
inline void fire_due_transitions(AgentColumns& st, Step step, const ProgressionTable& table,
                                 const KeyedRng& rng, StepEvents& events,
                                 std::vector<AgentId>* newly_symptomatic = nullptr,
                                 bool audit = false) {
  for (AgentId i = 0; i < st.size(); ++i) {
    if (st.next_transition_at[i] != step) continue;
    const Stage from = st.disease_stage[i];
    const Stage to = st.next_stage[i];
    if (audit && !is_legal_transition(from, to)) {
      throw InvariantViolation("illegal transition " + std::string(name_of(from)) + " -> " +
                               std::string(name_of(to)) + " for agent " + std::to_string(i));
    }
    enter_stage(st, i, to, step, table, rng);
    switch (to) {
      case Stage::Hospitalized:
        ++events.hospitalizations;
        break;
      case Stage::CriticalICU:
        ++events.icu_admissions;
        break;
      case Stage::Dead:
        ++events.deaths;
        break;
      case Stage::Recovered:
        ++events.recoveries;
        break;
      default:
        break;
    }
    if (newly_symptomatic && is_symptomatic(to)) newly_symptomatic->push_back(i);
  }
}

}  // namespace epigraph

#pragma once

// Reference implementation of the same model, one record per agent and one
// loop iteration per interaction. It shares parameter types and the keyed
// random stream with the engine but none of the step code, so replaying the
// same draws must reproduce the engine's trajectory bit for bit.
//
// In IndependentEdges mode each interaction gets its own Bernoulli draw
// instead of one draw per agent against the summed hazard. The infection
// marginals agree; the trajectories do not.

#include <algorithm>
#include <deque>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "epigraph/engine.hpp"
#include "epigraph/graph.hpp"
#include "epigraph/rng.hpp"
#include "epigraph/state.hpp"
#include "epigraph/transmission.hpp"
#include "epigraph/types.hpp"

namespace epigraph {

struct NaiveAgent {
  int age_group = 0;
  int occupation = 1;
  std::uint32_t household_id = 0;
  double random_degree = 0.0;
  bool has_den_app = false;

  Stage stage = Stage::Susceptible;
  Step infected_at = kNever;
  Step next_transition_at = kNever;
  Stage next_stage = Stage::Susceptible;
  Step quarantine_start = kNever;
  Step quarantine_until = kNever;
  VaccineStatus vaccine_status = VaccineStatus::PreVaccination;
  Step dose1_at = kNever;
  Step dose2_at = kNever;
  bool immune = false;
  Step test_sample_at = kNever;
  Step test_ready_at = kNever;
  bool test_positive = false;
  Step test_requested_at = kNever;
};

inline std::vector<NaiveAgent> to_naive_agents(const AgentColumns& st) {
  std::vector<NaiveAgent> out(st.size());
  for (AgentId i = 0; i < st.size(); ++i) {
    NaiveAgent& a = out[i];
    a.age_group = st.age_group[i];
    a.occupation = st.occupation[i];
    a.household_id = st.household_id[i];
    a.random_degree = st.random_degree[i];
    a.has_den_app = st.has_den_app[i] != 0;
    a.stage = st.disease_stage[i];
    a.infected_at = st.infected_at[i];
    a.next_transition_at = st.next_transition_at[i];
    a.next_stage = st.next_stage[i];
    a.quarantine_start = st.quarantine_start[i];
    a.quarantine_until = st.quarantine_until[i];
    a.vaccine_status = st.vaccine_status[i];
    a.dose1_at = st.dose1_at[i];
    a.dose2_at = st.dose2_at[i];
    a.immune = st.immune[i] != 0;
    a.test_sample_at = st.test_sample_at[i];
    a.test_ready_at = st.test_ready_at[i];
    a.test_positive = st.test_positive[i] != 0;
    a.test_requested_at = st.test_requested_at[i];
  }
  return out;
}

struct Divergence {
  AgentId agent;
  std::string field;
};

// First agent and field where the two states differ.
inline std::optional<Divergence> first_difference(const AgentColumns& st, const std::vector<NaiveAgent>& agents) {
  if (st.size() != agents.size()) return Divergence{0, "n_agents"};
  for (AgentId i = 0; i < st.size(); ++i) {
    const NaiveAgent& a = agents[i];
#define EPIGRAPH_CMP(col, field, cast) \
  if (static_cast<cast>(st.col[i]) != static_cast<cast>(a.field)) return Divergence{i, #col};
    EPIGRAPH_CMP(disease_stage, stage, int)
    EPIGRAPH_CMP(infected_at, infected_at, long)
    EPIGRAPH_CMP(next_transition_at, next_transition_at, long)
    EPIGRAPH_CMP(next_stage, next_stage, int)
    EPIGRAPH_CMP(quarantine_start, quarantine_start, long)
    EPIGRAPH_CMP(quarantine_until, quarantine_until, long)
    EPIGRAPH_CMP(vaccine_status, vaccine_status, int)
    EPIGRAPH_CMP(dose1_at, dose1_at, long)
    EPIGRAPH_CMP(dose2_at, dose2_at, long)
    EPIGRAPH_CMP(immune, immune, int)
    EPIGRAPH_CMP(test_sample_at, test_sample_at, long)
    EPIGRAPH_CMP(test_ready_at, test_ready_at, long)
    EPIGRAPH_CMP(test_positive, test_positive, int)
    EPIGRAPH_CMP(test_requested_at, test_requested_at, long)
    EPIGRAPH_CMP(has_den_app, has_den_app, int)
#undef EPIGRAPH_CMP
  }
  return std::nullopt;
}

class OracleSim {
 public:
  enum class Mode { Replay, IndependentEdges };

  OracleSim(const AgentColumns& initial, ModelParams params, std::uint64_t seed, Mode mode = Mode::Replay,
            Step first_step = 1)
      : agents_(to_naive_agents(initial)), params_(std::move(params)), rng_(seed), mode_(mode), clock_(first_step) {}

  const std::vector<NaiveAgent>& agents() const noexcept { return agents_; }
  std::vector<NaiveAgent>& mutable_agents() noexcept { return agents_; }
  Step clock() const noexcept { return clock_; }

  StepEvents step(const StepGraph& graph) {
    if (graph.step != clock_) throw InvariantViolation("oracle: step graph does not match clock");
    for (std::size_t e = 0; e < graph.size(); ++e) {
      if (graph.src[e] >= agents_.size() || graph.dst[e] >= agents_.size() || graph.src[e] == graph.dst[e]) {
        throw InvariantViolation("oracle: bad edge " + std::to_string(e));
      }
    }
    const Step t = clock_;
    StepEvents ev;
    ev.interactions = static_cast<std::int64_t>(graph.size());
    const auto& iv = params_.interventions;

    infect(graph, t, ev);
    const std::vector<AgentId> symptomatic = progress(t, ev);
    if (iv.testing.enabled || iv.quarantine.enabled || iv.den.enabled) test(t, symptomatic, ev);
    if (iv.quarantine.enabled) end_quarantines(t);
    if (iv.vaccination.enabled) vaccinate(t, ev);

    if (iv.den.enabled) {
      history_.push_back(graph);
      while (history_.size() > static_cast<std::size_t>(iv.den.lookback)) history_.pop_front();
    }
    ++clock_;
    return ev;
  }

  // Hazard from one interaction, straight from the formula.
  double interaction_hazard(const NaiveAgent& infector, const NaiveAgent& target, NetworkKind kind, Step t) const {
    const auto& d = params_.disease;
    double a;
    switch (infector.stage) {
      case Stage::Asymptomatic:
      case Stage::PresymptomaticMild:
      case Stage::PresymptomaticSevere:
        a = d.asymptomatic_scale;
        break;
      case Stage::MildSymptomatic:
      case Stage::SevereSymptomatic:
        a = 1.0;
        break;
      default:
        return 0.0;
    }
    if (infector.quarantine_until != kNever) return 0.0;
    const int days = t - infector.infected_at;
    if (days < 1 || days > d.max_day()) return 0.0;
    const double w = day_weight(days, d.infectiousness_mean, d.infectiousness_sd);
    return d.R * d.susceptibility[target.age_group] * a * d.network_scale[index_of(kind)] /
           d.mean_daily_interactions * w;
  }

 private:
  struct Incoming {
    AgentId src;
    NetworkKind kind;
    double hazard;
  };

  void infect(const StepGraph& graph, Step t, StepEvents& ev) {
    std::vector<std::vector<Incoming>> incoming(agents_.size());
    for (std::size_t e = 0; e < graph.size(); ++e) {
      const NaiveAgent& from = agents_[graph.src[e]];
      const NaiveAgent& to = agents_[graph.dst[e]];
      if (to.stage != Stage::Susceptible) continue;
      bool infectious = false;
      switch (from.stage) {
        case Stage::Asymptomatic:
        case Stage::PresymptomaticMild:
        case Stage::PresymptomaticSevere:
        case Stage::MildSymptomatic:
        case Stage::SevereSymptomatic:
          infectious = from.quarantine_until == kNever;
          break;
        default:
          break;
      }
      if (!infectious) continue;
      const double h = interaction_hazard(from, to, graph.kind[e], t);
      incoming[graph.dst[e]].push_back({graph.src[e], graph.kind[e], h});
    }

    const auto s = static_cast<std::uint32_t>(t);
    for (AgentId i = 0; i < agents_.size(); ++i) {
      auto& list = incoming[i];
      if (list.empty()) continue;
      std::sort(list.begin(), list.end(), [](const Incoming& a, const Incoming& b) {
        return a.src != b.src ? a.src < b.src : a.kind < b.kind;
      });
      bool infected = false;
      if (mode_ == Mode::Replay) {
        double total = 0.0;
        for (const auto& m : list) total += m.hazard;
        infected = rng_.uniform(s, i, Purpose::Infection) < -std::expm1(-total);
      } else {
        for (std::uint32_t k = 0; k < list.size() && !infected; ++k) {
          infected = rng_.uniform(s, i, Purpose::EdgeInfection, k) < -std::expm1(-list[k].hazard);
        }
      }
      if (!infected) continue;
      NaiveAgent& a = agents_[i];
      Stage stage;
      if (params_.interventions.vaccination.immunity == ImmunityMode::NonSterilizing && a.immune) {
        stage = Stage::Asymptomatic;
      } else {
        stage = initial_branch(a.age_group, rng_.uniform(s, i, Purpose::InfectionBranch));
      }
      a.infected_at = t;
      set_stage(i, stage, t);
      ++ev.new_infections;
    }
  }

  Stage initial_branch(int age, double u) const {
    const auto& p = params_.progression.initial[age];
    const Stage targets[3] = {Stage::Asymptomatic, Stage::PresymptomaticMild, Stage::PresymptomaticSevere};
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) {
      acc += p[k];
      if (u < acc) return targets[k];
    }
    for (int k = 2; k >= 0; --k) {
      if (p[k] > 0.0) return targets[k];
    }
    return Stage::Asymptomatic;
  }

  void set_stage(AgentId i, Stage stage, Step t) {
    NaiveAgent& a = agents_[i];
    a.stage = stage;
    if (stage == Stage::Recovered || stage == Stage::Dead || stage == Stage::Vaccinated) {
      a.next_transition_at = kNever;
      a.next_stage = stage;
      return;
    }
    const auto s = static_cast<std::uint32_t>(t);
    const auto& options = params_.progression.from(stage);
    const double u = rng_.uniform(s, i, Purpose::ProgressionBranch);
    const Transition* chosen = nullptr;
    double acc = 0.0;
    for (const auto& o : options) {
      acc += o.probability[a.age_group];
      if (u < acc) {
        chosen = &o;
        break;
      }
    }
    if (!chosen) {
      for (auto it = options.rbegin(); it != options.rend() && !chosen; ++it) {
        if (it->probability[a.age_group] > 0.0) chosen = &*it;
      }
    }
    if (!chosen) chosen = &options.back();
    a.next_stage = chosen->to;
    a.next_transition_at = t + chosen->duration.steps(rng_.uniform(s, i, Purpose::ProgressionDelay));
  }

  std::vector<AgentId> progress(Step t, StepEvents& ev) {
    std::vector<AgentId> symptomatic;
    for (AgentId i = 0; i < agents_.size(); ++i) {
      NaiveAgent& a = agents_[i];
      if (a.next_transition_at != t) continue;
      const Stage to = a.next_stage;
      set_stage(i, to, t);
      if (to == Stage::Hospitalized) ++ev.hospitalizations;
      if (to == Stage::CriticalICU) ++ev.icu_admissions;
      if (to == Stage::Dead) ++ev.deaths;
      if (to == Stage::Recovered) ++ev.recoveries;
      if (to == Stage::MildSymptomatic || to == Stage::SevereSymptomatic) symptomatic.push_back(i);
    }
    return symptomatic;
  }

  void test(Step t, const std::vector<AgentId>& symptomatic, StepEvents& ev) {
    const auto& iv = params_.interventions;
    const auto s = static_cast<std::uint32_t>(t);
    std::vector<AgentId> positives;
    for (AgentId i = 0; i < agents_.size(); ++i) {
      NaiveAgent& a = agents_[i];
      if (a.test_ready_at != t) continue;
      if (a.test_positive) positives.push_back(i);
      a.test_sample_at = kNever;
      a.test_ready_at = kNever;
      a.test_positive = false;
    }
    ev.positive_results += static_cast<std::int64_t>(positives.size());
    if (iv.quarantine.enabled) {
      for (AgentId i : positives) {
        agents_[i].quarantine_start = t;
        agents_[i].quarantine_until = t + iv.quarantine.duration;
        ++ev.quarantines;
      }
    }

    if (iv.den.enabled) {
      std::set<AgentId> notified;
      for (AgentId p : positives) {
        if (!agents_[p].has_den_app) continue;
        for (const StepGraph& day : history_) {
          for (std::size_t e = 0; e < day.size(); ++e) {
            if (day.src[e] != p) continue;
            const AgentId c = day.dst[e];
            if (agents_[c].has_den_app && agents_[c].quarantine_until == kNever) notified.insert(c);
          }
        }
      }
      for (AgentId c : notified) {
        ++ev.notifications;
        NaiveAgent& a = agents_[c];
        if (rng_.uniform(s, c, Purpose::DenCompliance) < iv.den.compliance_prob && a.test_ready_at == kNever) {
          a.test_requested_at = t + 1;
        }
      }
    }

    std::set<AgentId> to_test;
    for (AgentId i = 0; i < agents_.size(); ++i) {
      if (agents_[i].test_requested_at == t) {
        to_test.insert(i);
        agents_[i].test_requested_at = kNever;
      }
    }
    if (iv.testing.enabled || iv.quarantine.enabled) to_test.insert(symptomatic.begin(), symptomatic.end());
    const TestKind& kind = iv.testing.kind;
    for (AgentId i : to_test) {
      NaiveAgent& a = agents_[i];
      if (a.test_ready_at != kNever) continue;
      const double u = rng_.uniform(s, i, Purpose::TestResult);
      const bool carrying = a.stage != Stage::Susceptible && a.stage != Stage::Recovered &&
                            a.stage != Stage::Vaccinated && a.stage != Stage::Dead;
      a.test_positive = carrying ? u < kind.positive_detection_prob : u < iv.testing.false_positive_prob;
      a.test_sample_at = t;
      const double v = rng_.uniform(s, i, Purpose::TestTurnaround);
      const int choices = kind.turnaround_max - kind.turnaround_min + 1;
      a.test_ready_at = t + kind.turnaround_min + std::min(choices - 1, static_cast<int>(v * choices));
      ++ev.tests;
    }
  }

  void end_quarantines(Step t) {
    const auto& q = params_.interventions.quarantine;
    for (AgentId i = 0; i < agents_.size(); ++i) {
      NaiveAgent& a = agents_[i];
      if (a.quarantine_until == kNever) continue;
      bool leave = t >= a.quarantine_until;
      if (!leave && t > a.quarantine_start && q.dropout_prob > 0.0) {
        leave = rng_.uniform(static_cast<std::uint32_t>(t), i, Purpose::QuarantineDropout) < q.dropout_prob;
      }
      if (leave) {
        a.quarantine_start = kNever;
        a.quarantine_until = kNever;
      }
    }
  }

  void vaccinate(Step t, StepEvents& ev) {
    const auto& p = params_.interventions.vaccination;
    if (!vaccination_started_) {
      std::size_t infected = 0;
      for (const auto& a : agents_) {
        if (a.stage != Stage::Susceptible && a.stage != Stage::Recovered && a.stage != Stage::Vaccinated &&
            a.stage != Stage::Dead) {
          ++infected;
        }
      }
      vaccination_started_ = static_cast<double>(infected) >= p.start_trigger * static_cast<double>(agents_.size());
    }
    if (vaccination_started_) {
      struct Candidate {
        AgentId id;
        bool first;
      };
      std::vector<Candidate> eligible;
      for (AgentId i = 0; i < agents_.size(); ++i) {
        const NaiveAgent& a = agents_[i];
        if (a.stage == Stage::Dead || a.stage == Stage::Hospitalized || a.stage == Stage::CriticalICU) continue;
        if (p.susceptible_only && a.stage != Stage::Susceptible && a.stage != Stage::Vaccinated) continue;
        if (a.vaccine_status == VaccineStatus::PreVaccination) {
          eligible.push_back({i, true});
        } else if (a.vaccine_status == VaccineStatus::FirstDose && t - a.dose1_at >= p.dose_gap) {
          eligible.push_back({i, false});
        }
      }
      std::sort(eligible.begin(), eligible.end(), [&](const Candidate& x, const Candidate& y) {
        return goes_before(x.id, x.first, y.id, y.first);
      });
      const long budget = std::lround(p.daily_rate * static_cast<double>(agents_.size()));
      for (long k = 0; k < budget && k < static_cast<long>(eligible.size()); ++k) {
        NaiveAgent& a = agents_[eligible[static_cast<std::size_t>(k)].id];
        if (eligible[static_cast<std::size_t>(k)].first) {
          a.vaccine_status = VaccineStatus::FirstDose;
          a.dose1_at = t;
          ++ev.first_doses;
        } else {
          a.vaccine_status = VaccineStatus::FullyVaccinated;
          a.dose2_at = t;
          ++ev.second_doses;
        }
      }
    }

    const auto s = static_cast<std::uint32_t>(t);
    for (AgentId i = 0; i < agents_.size(); ++i) {
      NaiveAgent& a = agents_[i];
      if (a.dose1_at == kNever || a.immune) continue;
      bool gained = false;
      const bool dose2_earlier = a.dose2_at != kNever && a.dose2_at + p.dose2_latency < t;
      if (t == a.dose1_at + p.dose1_latency && !dose2_earlier) {
        gained = rng_.uniform(s, i, Purpose::VaccineDose1Immunity) < p.dose1_efficacy;
      }
      if (!gained && a.dose2_at != kNever && t == a.dose2_at + p.dose2_latency) {
        double q = p.dose2_efficacy;
        if (a.dose1_at + p.dose1_latency <= t) {
          q = p.dose1_efficacy >= 1.0 ? 0.0
                                      : std::clamp((p.dose2_efficacy - p.dose1_efficacy) / (1.0 - p.dose1_efficacy),
                                                   0.0, 1.0);
        }
        gained = rng_.uniform(s, i, Purpose::VaccineDose2Immunity) < q;
      }
      if (gained) {
        a.immune = true;
        if (p.immunity == ImmunityMode::Sterilizing && a.stage == Stage::Susceptible) a.stage = Stage::Vaccinated;
      }
    }
  }

  // Strategy order between two dose candidates.
  bool goes_before(AgentId x, bool x_first, AgentId y, bool y_first) const {
    const auto& p = params_.interventions.vaccination;
    const int ax = agents_[x].age_group;
    const int ay = agents_[y].age_group;
    auto group = [&](int age, bool first) {
      switch (p.strategy) {
        case DosingStrategy::StandardDosing:
          return first ? 1 : 0;
        case DosingStrategy::DelayedSecondDose:
          return first ? 0 : 1;
        case DosingStrategy::DelayedExcept65Plus:
          if (age >= p.elderly_min_age_band) return 0;
          return first ? 1 : 2;
      }
      return 0;
    };
    const int gx = group(ax, x_first);
    const int gy = group(ay, y_first);
    if (gx != gy) return gx < gy;
    if (ax != ay) return ax > ay;
    if (x_first != y_first) return x_first;
    return x < y;
  }

  std::vector<NaiveAgent> agents_;
  ModelParams params_;
  KeyedRng rng_;
  Mode mode_;
  Step clock_;
  bool vaccination_started_ = false;
  std::deque<StepGraph> history_;
};

}  // namespace epigraph

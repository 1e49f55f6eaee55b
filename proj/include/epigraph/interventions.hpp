#pragma once

// Symptom-triggered testing, self-quarantine, digital exposure notification
// and two-dose vaccination.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <deque>
#include <string>
#include <vector>

#include "epigraph/graph.hpp"
#include "epigraph/json_util.hpp"
#include "epigraph/rng.hpp"
#include "epigraph/state.hpp"
#include "epigraph/types.hpp"

namespace epigraph {

// A diagnostic test. `positive_detection_prob` is the chance an infected
// sample comes back positive; turnaround is uniform on
// [turnaround_min, turnaround_max] steps.
struct TestKind {
  std::string name = "rt_pcr";
  double positive_detection_prob = 0.95;
  Step turnaround_min = 3;
  Step turnaround_max = 5;

  Step turnaround(double u) const noexcept {
    const Step span = turnaround_max - turnaround_min + 1;
    Step k = static_cast<Step>(u * span);
    if (k >= span) k = span - 1;
    return turnaround_min + k;
  }

  static TestKind antigen() { return {"antigen", 0.65, 2, 2}; }
  static TestKind rt_pcr() { return {"rt_pcr", 0.95, 3, 5}; }
  static TestKind point_of_care() { return {"poc", 0.85, 1, 1}; }

  static TestKind preset(const std::string& name) {
    if (name == "antigen") return antigen();
    if (name == "rt_pcr") return rt_pcr();
    if (name == "poc") return point_of_care();
    throw ConfigError("unknown test kind '" + name + "' (antigen, rt_pcr, poc)");
  }
};

struct TestingConfig {
  bool enabled = false;
  TestKind kind = TestKind::rt_pcr();
  double false_positive_prob = 0.0;
};

struct QuarantineConfig {
  bool enabled = false;
  Step duration = 14;
  double dropout_prob = 0.05;
};

struct DenConfig {
  bool enabled = false;
  double app_adoption = 0.3;
  double compliance_prob = 0.8;
  Step lookback = 7;
};

enum class DosingStrategy : std::uint8_t { StandardDosing, DelayedSecondDose, DelayedExcept65Plus };
enum class ImmunityMode : std::uint8_t { Sterilizing, NonSterilizing };

struct VaccinePolicy {
  bool enabled = false;
  DosingStrategy strategy = DosingStrategy::StandardDosing;
  double dose1_efficacy = 0.8;
  double dose2_efficacy = 0.95;
  Step dose1_latency = 12;
  Step dose2_latency = 0;
  Step dose_gap = 21;
  double daily_rate = 0.003;
  double start_trigger = 0.01;
  ImmunityMode immunity = ImmunityMode::Sterilizing;
  // Lowest age band treated as 65+ by DelayedExcept65Plus (band 6 is 61-70).
  int elderly_min_age_band = 6;
  // Only agents still Susceptible receive doses.
  bool susceptible_only = false;

  std::int64_t daily_doses(std::size_t n_agents) const noexcept {
    return std::llround(daily_rate * static_cast<double>(n_agents));
  }

  // Chance a non-immune agent becomes immune at dose 2, so that the
  // marginal after both doses is dose2_efficacy.
  double dose2_conditional(bool dose1_realized) const noexcept {
    if (!dose1_realized) return dose2_efficacy;
    if (dose1_efficacy >= 1.0) return 0.0;
    return std::clamp((dose2_efficacy - dose1_efficacy) / (1.0 - dose1_efficacy), 0.0, 1.0);
  }
};

inline DosingStrategy parse_strategy(const std::string& s) {
  if (s == "standard") return DosingStrategy::StandardDosing;
  if (s == "delayed_second_dose") return DosingStrategy::DelayedSecondDose;
  if (s == "delayed_except_65plus") return DosingStrategy::DelayedExcept65Plus;
  throw ConfigError("unknown vaccination strategy '" + s +
                    "' (standard, delayed_second_dose, delayed_except_65plus)");
}

struct InterventionConfig {
  TestingConfig testing;
  QuarantineConfig quarantine;
  DenConfig den;
  VaccinePolicy vaccination;

  bool testing_active() const noexcept { return testing.enabled || quarantine.enabled || den.enabled; }
};

inline InterventionConfig parse_interventions(const JsonField& j) {
  InterventionConfig c;
  if (j.has("testing")) {
    const JsonField t = j["testing"];
    c.testing.enabled = boolean_or(t, "enabled", false);
    c.testing.kind = TestKind::preset(string_or(t, "kind", "rt_pcr"));
    if (t.has("positive_detection_prob")) c.testing.kind.positive_detection_prob = t["positive_detection_prob"].probability();
    if (t.has("turnaround_min")) c.testing.kind.turnaround_min = static_cast<Step>(t["turnaround_min"].integer());
    if (t.has("turnaround_max")) c.testing.kind.turnaround_max = static_cast<Step>(t["turnaround_max"].integer());
    if (c.testing.kind.turnaround_min < 1 || c.testing.kind.turnaround_max < c.testing.kind.turnaround_min) {
      t.fail("turnaround must satisfy 1 <= turnaround_min <= turnaround_max");
    }
    c.testing.false_positive_prob = probability_or(t, "false_positive_prob", 0.0);
  }
  if (j.has("quarantine")) {
    const JsonField q = j["quarantine"];
    c.quarantine.enabled = boolean_or(q, "enabled", false);
    c.quarantine.duration = static_cast<Step>(integer_or(q, "duration", 14));
    if (c.quarantine.duration < 1) q["duration"].fail("must be >= 1");
    c.quarantine.dropout_prob = probability_or(q, "dropout_prob", 0.05);
  }
  if (j.has("den")) {
    const JsonField d = j["den"];
    c.den.enabled = boolean_or(d, "enabled", false);
    c.den.app_adoption = probability_or(d, "app_adoption", 0.3);
    c.den.compliance_prob = probability_or(d, "compliance_prob", 0.8);
    c.den.lookback = static_cast<Step>(integer_or(d, "lookback", 7));
    if (c.den.lookback < 1) d["lookback"].fail("must be >= 1");
  }
  if (j.has("vaccination")) {
    const JsonField v = j["vaccination"];
    auto& p = c.vaccination;
    p.enabled = boolean_or(v, "enabled", false);
    if (v.has("strategy")) {
      try {
        p.strategy = parse_strategy(v["strategy"].string());
      } catch (const ConfigError& e) {
        v["strategy"].fail(e.what());
      }
    }
    p.dose1_efficacy = probability_or(v, "dose1_efficacy", p.dose1_efficacy);
    p.dose2_efficacy = probability_or(v, "dose2_efficacy", p.dose2_efficacy);
    p.dose1_latency = static_cast<Step>(integer_or(v, "dose1_latency", p.dose1_latency));
    p.dose2_latency = static_cast<Step>(integer_or(v, "dose2_latency", p.dose2_latency));
    p.dose_gap = static_cast<Step>(integer_or(v, "dose_gap", p.dose_gap));
    if (p.dose1_latency < 0 || p.dose2_latency < 0 || p.dose_gap < 1) {
      v.fail("latencies must be >= 0 and dose_gap >= 1");
    }
    p.daily_rate = probability_or(v, "daily_rate", p.daily_rate);
    p.start_trigger = probability_or(v, "start_trigger", p.start_trigger);
    const std::string mode = string_or(v, "immunity", "sterilizing");
    if (mode == "sterilizing") {
      p.immunity = ImmunityMode::Sterilizing;
    } else if (mode == "non_sterilizing") {
      p.immunity = ImmunityMode::NonSterilizing;
    } else {
      v["immunity"].fail("expected sterilizing or non_sterilizing");
    }
    p.elderly_min_age_band = static_cast<int>(integer_or(v, "elderly_min_age_band", p.elderly_min_age_band));
    if (p.elderly_min_age_band < 0 || p.elderly_min_age_band >= kAgeBands) {
      v["elderly_min_age_band"].fail("must be in 0..8");
    }
    p.susceptible_only = boolean_or(v, "susceptible_only", false);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Exposure notification

// Contacts of the last `capacity` steps, kept only for pairs where both
// agents hold the app (no other pair can ever be notified). Adjacency is
// stored per step as offsets/targets indexed by source agent.
class ContactLog {
 public:
  struct Day {
    Step step = 0;
    std::vector<std::uint32_t> offsets;
    std::vector<AgentId> targets;
  };

  explicit ContactLog(std::size_t capacity = 7) : capacity_(capacity) {}

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return days_.size(); }
  const std::deque<Day>& days() const noexcept { return days_; }

  void push(const StepGraph& g, const AgentColumns& st) {
    Day day;
    day.step = g.step;
    day.offsets.assign(st.size() + 1, 0);
    for (std::size_t e = 0; e < g.size(); ++e) {
      if (st.has_den_app[g.src[e]] && st.has_den_app[g.dst[e]]) ++day.offsets[g.src[e] + 1];
    }
    for (std::size_t i = 0; i < st.size(); ++i) day.offsets[i + 1] += day.offsets[i];
    day.targets.resize(day.offsets.back());
    std::vector<std::uint32_t> cursor(day.offsets.begin(), day.offsets.end() - 1);
    for (std::size_t e = 0; e < g.size(); ++e) {
      if (st.has_den_app[g.src[e]] && st.has_den_app[g.dst[e]]) day.targets[cursor[g.src[e]]++] = g.dst[e];
    }
    days_.push_back(std::move(day));
    while (days_.size() > capacity_) days_.pop_front();
  }

  template <class F>
  void for_each_contact(AgentId agent, F&& visit) const {
    for (const Day& day : days_) {
      if (agent + 1 >= day.offsets.size()) continue;
      for (auto k = day.offsets[agent]; k < day.offsets[agent + 1]; ++k) visit(day.targets[k]);
    }
  }

 private:
  std::size_t capacity_;
  std::deque<Day> days_;
};

// App-holding, non-quarantined contacts of a positive agent, sorted and
// unique. Empty when the positive agent has no app.
inline std::vector<AgentId> notify_contacts(AgentId positive, const ContactLog& log, const AgentColumns& st) {
  std::vector<AgentId> out;
  if (!st.has_den_app[positive]) return out;
  log.for_each_contact(positive, [&](AgentId c) {
    if (c != positive && st.has_den_app[c] && !st.quarantined(c)) out.push_back(c);
  });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Testing and quarantine

// Starts a test for each listed agent without one pending. Agents must be
// in ascending id order for event counts to be order independent.
inline void sample_tests(AgentColumns& st, const std::vector<AgentId>& agents, const TestingConfig& cfg, Step step,
                         const KeyedRng& rng, StepEvents& events) {
  const auto s = static_cast<std::uint32_t>(step);
  for (AgentId i : agents) {
    if (st.has_pending_test(i)) continue;
    const double u = rng.uniform(s, i, Purpose::TestResult);
    const bool positive = is_infected(st.disease_stage[i]) ? u < cfg.kind.positive_detection_prob
                                                             : u < cfg.false_positive_prob;
    st.test_sample_at[i] = step;
    st.test_ready_at[i] = step + cfg.kind.turnaround(rng.uniform(s, i, Purpose::TestTurnaround));
    st.test_positive[i] = positive ? 1 : 0;
    ++events.tests;
  }
}

// Agents entering a symptomatic stage this step get a test.
inline void symptom_triggered_test(AgentColumns& st, const std::vector<AgentId>& newly_symptomatic,
                                   const TestingConfig& cfg, Step step, const KeyedRng& rng, StepEvents& events) {
  sample_tests(st, newly_symptomatic, cfg, step, rng, events);
}

// Results due at `step`; returns the agents that tested positive.
inline std::vector<AgentId> deliver_results(AgentColumns& st, Step step, StepEvents& events) {
  std::vector<AgentId> positives;
  for (AgentId i = 0; i < st.size(); ++i) {
    if (st.test_ready_at[i] != step) continue;
    if (st.test_positive[i]) positives.push_back(i);
    st.test_sample_at[i] = kNever;
    st.test_ready_at[i] = kNever;
    st.test_positive[i] = 0;
  }
  events.positive_results += static_cast<std::int64_t>(positives.size());
  return positives;
}

// Positive agents start a quarantine covering steps step+1 .. step+duration.
inline void start_quarantine(AgentColumns& st, const std::vector<AgentId>& positives, const QuarantineConfig& cfg,
                             Step step, StepEvents& events) {
  for (AgentId i : positives) {
    st.quarantine_start[i] = step;
    st.quarantine_until[i] = step + cfg.duration;
    ++events.quarantines;
  }
}

// Ends quarantines that reached their last step, and lets agents drop out
// with probability dropout_prob per step after their first.
inline void expire_quarantine(AgentColumns& st, const QuarantineConfig& cfg, Step step, const KeyedRng& rng) {
  for (AgentId i = 0; i < st.size(); ++i) {
    if (!st.quarantined(i)) continue;
    bool leave = st.quarantine_until[i] <= step;
    if (!leave && st.quarantine_start[i] < step && cfg.dropout_prob > 0.0) {
      leave = rng.uniform(static_cast<std::uint32_t>(step), i, Purpose::QuarantineDropout) < cfg.dropout_prob;
    }
    if (leave) {
      st.quarantine_start[i] = kNever;
      st.quarantine_until[i] = kNever;
    }
  }
}

// Positive results start quarantines; quarantines then expire or drop out.
inline void apply_quarantine(AgentColumns& st, const std::vector<AgentId>& positives, const QuarantineConfig& cfg,
                             Step step, const KeyedRng& rng, StepEvents& events) {
  start_quarantine(st, positives, cfg, step, events);
  expire_quarantine(st, cfg, step, rng);
}

// ---------------------------------------------------------------------------
// Vaccination

enum class DoseKind : std::uint8_t { First, Second };

struct DoseCandidate {
  AgentId agent;
  DoseKind dose;
};

inline bool vaccine_eligible(const AgentColumns& st, AgentId i, const VaccinePolicy& p) {
  const Stage s = st.disease_stage[i];
  if (s == Stage::Dead || s == Stage::Hospitalized || s == Stage::CriticalICU) return false;
  if (p.susceptible_only && s != Stage::Susceptible && s != Stage::Vaccinated) return false;
  return true;
}

// Sort key realizing the strategy's total order: strategy group, then age
// band descending, then first doses before second doses, then agent id.
inline std::uint64_t priority_key(DosingStrategy strategy, int age_band, DoseKind dose, AgentId id,
                                  int elderly_min_age_band) {
  const bool first = dose == DoseKind::First;
  std::uint64_t group = 0;
  switch (strategy) {
    case DosingStrategy::StandardDosing:
      group = first ? 1 : 0;
      break;
    case DosingStrategy::DelayedSecondDose:
      group = first ? 0 : 1;
      break;
    case DosingStrategy::DelayedExcept65Plus:
      group = age_band >= elderly_min_age_band ? 0 : (first ? 1 : 2);
      break;
  }
  const auto band_rank = static_cast<std::uint64_t>(kAgeBands - 1 - age_band);
  return (group << 40) | (band_rank << 36) | (std::uint64_t{first ? 0u : 1u} << 32) | id;
}

// Agents eligible for a dose at `step`, highest priority first, truncated to
// `limit` entries.
inline std::vector<DoseCandidate> vaccination_priority_order(const AgentColumns& st, const VaccinePolicy& p,
                                                             Step step, std::size_t limit = SIZE_MAX) {
  std::vector<std::pair<std::uint64_t, DoseCandidate>> keyed;
  for (AgentId i = 0; i < st.size(); ++i) {
    if (!vaccine_eligible(st, i, p)) continue;
    DoseKind dose;
    if (st.vaccine_status[i] == VaccineStatus::PreVaccination) {
      dose = DoseKind::First;
    } else if (st.vaccine_status[i] == VaccineStatus::FirstDose && step >= st.dose1_at[i] + p.dose_gap) {
      dose = DoseKind::Second;
    } else {
      continue;
    }
    keyed.push_back({priority_key(p.strategy, st.age_group[i], dose, i, p.elderly_min_age_band), {i, dose}});
  }
  const auto by_key = [](const auto& a, const auto& b) { return a.first < b.first; };
  if (limit < keyed.size()) {
    std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(limit), keyed.end(), by_key);
    keyed.resize(limit);
  } else {
    std::sort(keyed.begin(), keyed.end(), by_key);
  }
  std::vector<DoseCandidate> out;
  out.reserve(keyed.size());
  for (const auto& k : keyed) out.push_back(k.second);
  return out;
}

// Marks immunity realized at `step`: dose 1 at dose1_at + dose1_latency,
// dose 2 at dose2_at + dose2_latency.
inline void realize_vaccine_immunity(AgentColumns& st, const VaccinePolicy& p, Step step, const KeyedRng& rng) {
  const auto s = static_cast<std::uint32_t>(step);
  for (AgentId i = 0; i < st.size(); ++i) {
    if (st.dose1_at[i] == kNever) continue;
    bool became_immune = false;
    const Step d1_realize = st.dose1_at[i] + p.dose1_latency;
    const bool dose2_done = st.dose2_at[i] != kNever && st.dose2_at[i] + p.dose2_latency < step;
    if (d1_realize == step && !st.immune[i] && !dose2_done) {
      became_immune = rng.uniform(s, i, Purpose::VaccineDose1Immunity) < p.dose1_efficacy;
    }
    if (st.dose2_at[i] != kNever && st.dose2_at[i] + p.dose2_latency == step && !st.immune[i] && !became_immune) {
      const double q = p.dose2_conditional(d1_realize <= step);
      became_immune = rng.uniform(s, i, Purpose::VaccineDose2Immunity) < q;
    }
    if (became_immune) {
      st.immune[i] = 1;
      if (p.immunity == ImmunityMode::Sterilizing && st.disease_stage[i] == Stage::Susceptible) {
        st.disease_stage[i] = Stage::Vaccinated;
      }
    }
  }
}

// Gives up to daily_doses() doses by priority, then realizes immunity due
// this step. No-op until `started`.
inline void administer_vaccines(AgentColumns& st, const VaccinePolicy& p, Step step, bool started,
                                const KeyedRng& rng, StepEvents& events) {
  if (started) {
    const auto budget = static_cast<std::size_t>(std::max<std::int64_t>(0, p.daily_doses(st.size())));
    const auto order = vaccination_priority_order(st, p, step, budget);
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto [i, dose] = order[k];
      if (dose == DoseKind::First) {
        st.vaccine_status[i] = VaccineStatus::FirstDose;
        st.dose1_at[i] = step;
        ++events.first_doses;
      } else {
        st.vaccine_status[i] = VaccineStatus::FullyVaccinated;
        st.dose2_at[i] = step;
        ++events.second_doses;
      }
    }
  }
  realize_vaccine_immunity(st, p, step, rng);
}

}  // namespace epigraph

#pragma once

// The vectorized simulation step.
//
// Transmission is a message pass over the step graph: every edge whose source
// is infectious and whose destination is susceptible carries a hazard, hazards
// are summed per destination, and each exposed agent draws once against
// 1 - exp(-total). Per-destination sums run in (source, network kind) order so
// the result does not depend on edge order.
//
// Phases of step t, in order:
//   1. transmission      4. test results, quarantine starts, notifications,
//   2. new infections       new test samples
//   3. due progression   5. quarantine expiry and dropout
//                        6. vaccination
// then the contact log records the step graph and the clock advances.

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "epigraph/graph.hpp"
#include "epigraph/interventions.hpp"
#include "epigraph/progression.hpp"
#include "epigraph/rng.hpp"
#include "epigraph/state.hpp"
#include "epigraph/transmission.hpp"
#include "epigraph/types.hpp"

namespace epigraph {

struct ModelParams {
  DiseaseParams disease;
  ProgressionTable progression;
  InterventionConfig interventions;
};

// Agents that can currently be infected by transmission.
inline bool is_exposable(Stage s) noexcept { return s == Stage::Susceptible; }

inline void check_graph(const StepGraph& g, std::size_t n_agents) {
  for (std::size_t e = 0; e < g.size(); ++e) {
    if (g.src[e] >= n_agents || g.dst[e] >= n_agents) {
      throw InvariantViolation("step graph edge " + std::to_string(e) + " references agent outside 0.." +
                               std::to_string(n_agents - 1));
    }
    if (g.src[e] == g.dst[e]) {
      throw InvariantViolation("step graph edge " + std::to_string(e) + " is a self-loop");
    }
  }
}

// Reusable buffers for gather_exposure.
struct GatherScratch {
  struct Message {
    AgentId dst;
    AgentId src;
    NetworkKind kind;
    double hazard;
  };
  std::vector<Message> messages;
  std::vector<double> source_weight;
  std::vector<InfectorClass> source_class;
};

// Total hazard per agent at `step`; zero for agents that cannot be infected.
inline void gather_exposure(const AgentColumns& st, const StepGraph& g, const DiseaseParams& params, Step step,
                            std::vector<double>& total, GatherScratch& scratch) {
  const std::size_t n = st.size();
  total.assign(n, 0.0);
  auto& weight = scratch.source_weight;
  auto& cls = scratch.source_class;
  weight.assign(n, 0.0);
  cls.assign(n, InfectorClass::NotInfectious);
  for (AgentId i = 0; i < n; ++i) {
    const InfectorClass c = infector_class(st.disease_stage[i]);
    if (c == InfectorClass::NotInfectious || st.quarantined(i)) continue;
    const double w = params.weight(step - st.infected_at[i]);
    if (w == 0.0) continue;
    cls[i] = c;
    weight[i] = w;
  }

  auto& messages = scratch.messages;
  messages.clear();
  for (std::size_t e = 0; e < g.size(); ++e) {
    const AgentId s = g.src[e];
    const AgentId d = g.dst[e];
    if (cls[s] == InfectorClass::NotInfectious || !is_exposable(st.disease_stage[d])) continue;
    const double h =
        params.coefficient[st.age_group[d]][static_cast<int>(cls[s])][index_of(g.kind[e])] * weight[s];
    messages.push_back({d, s, g.kind[e], h});
  }
  std::sort(messages.begin(), messages.end(), [](const auto& a, const auto& b) {
    if (a.dst != b.dst) return a.dst < b.dst;
    if (a.src != b.src) return a.src < b.src;
    return a.kind < b.kind;
  });
  for (const auto& m : messages) total[m.dst] += m.hazard;
}

inline std::vector<double> gather_exposure(const AgentColumns& st, const StepGraph& g, const DiseaseParams& params,
                                           Step step) {
  std::vector<double> total;
  GatherScratch scratch;
  gather_exposure(st, g, params, step, total, scratch);
  return total;
}

class Engine {
 public:
  // `state` is the population after seeding at step 0; the first step run is 1.
  Engine(AgentColumns state, std::shared_ptr<const ModelParams> params, std::uint64_t seed, Step first_step = 1)
      : st_(std::move(state)),
        params_(std::move(params)),
        rng_(seed),
        clock_(first_step),
        contacts_(static_cast<std::size_t>(params_->interventions.den.lookback)) {}

  const AgentColumns& state() const noexcept { return st_; }
  AgentColumns& mutable_state() noexcept { return st_; }
  const ModelParams& params() const noexcept { return *params_; }
  const KeyedRng& rng() const noexcept { return rng_; }
  Step clock() const noexcept { return clock_; }
  bool vaccination_started() const noexcept { return vaccination_started_; }
  const ContactLog& contact_log() const noexcept { return contacts_; }
  const std::vector<double>& last_exposure() const noexcept { return exposure_; }

  // Checks each fired transition against the legal stage graph and the
  // state invariants after each step.
  void set_audit(bool on) noexcept { audit_ = on; }

  StepEvents step(const StepGraph& graph) {
    if (graph.step != clock_) {
      throw InvariantViolation("step graph is for step " + std::to_string(graph.step) + " but engine clock is " +
                               std::to_string(clock_));
    }
    check_graph(graph, st_.size());
    const Step t = clock_;
    const auto& p = *params_;
    const auto& iv = p.interventions;
    StepEvents ev;
    ev.interactions = static_cast<std::int64_t>(graph.size());

    if (audit_) before_ = st_.disease_stage;

    transmit(graph, t, ev);

    symptomatic_.clear();
    fire_due_transitions(st_, t, p.progression, rng_, ev, &symptomatic_, audit_);

    if (iv.testing_active()) run_testing(t, ev);
    if (iv.quarantine.enabled) expire_quarantine(st_, iv.quarantine, t, rng_);

    if (iv.vaccination.enabled) {
      if (!vaccination_started_) {
        std::int64_t infected = 0;
        for (Stage s : st_.disease_stage) infected += is_infected(s) ? 1 : 0;
        vaccination_started_ =
            static_cast<double>(infected) >= iv.vaccination.start_trigger * static_cast<double>(st_.size());
      }
      administer_vaccines(st_, iv.vaccination, t, vaccination_started_, rng_, ev);
    }

    if (iv.den.enabled) contacts_.push(graph, st_);
    if (audit_) audit_step(t);
    ++clock_;
    return ev;
  }

 private:
  void transmit(const StepGraph& graph, Step t, StepEvents& ev) {
    const auto& p = *params_;
    gather_exposure(st_, graph, p.disease, t, exposure_, scratch_);
    const auto s = static_cast<std::uint32_t>(t);
    const bool force_asymptomatic = p.interventions.vaccination.immunity == ImmunityMode::NonSterilizing;
    const auto& messages = scratch_.messages;
    for (std::size_t k = 0; k < messages.size(); ++k) {
      const AgentId i = messages[k].dst;
      // messages are grouped by destination; one draw per agent
      if (k > 0 && messages[k - 1].dst == i) continue;
      const double prob = infection_probability(exposure_[i]);
      if (!(rng_.uniform(s, i, Purpose::Infection) < prob)) continue;
      const Stage stage = (force_asymptomatic && st_.immune[i])
                              ? Stage::Asymptomatic
                              : p.progression.initial_stage(st_.age_group[i], rng_.uniform(s, i, Purpose::InfectionBranch));
      st_.infected_at[i] = t;
      enter_stage(st_, i, stage, t, p.progression, rng_);
      ++ev.new_infections;
    }
  }

  void run_testing(Step t, StepEvents& ev) {
    const auto& iv = params_->interventions;
    auto positives = deliver_results(st_, t, ev);
    if (iv.quarantine.enabled) start_quarantine(st_, positives, iv.quarantine, t, ev);

    requested_.clear();
    if (iv.den.enabled) {
      notified_.clear();
      for (AgentId a : positives) {
        const auto contacts = notify_contacts(a, contacts_, st_);
        notified_.insert(notified_.end(), contacts.begin(), contacts.end());
      }
      std::sort(notified_.begin(), notified_.end());
      notified_.erase(std::unique(notified_.begin(), notified_.end()), notified_.end());
      const auto s = static_cast<std::uint32_t>(t);
      for (AgentId c : notified_) {
        ++ev.notifications;
        if (rng_.uniform(s, c, Purpose::DenCompliance) < iv.den.compliance_prob && !st_.has_pending_test(c)) {
          st_.test_requested_at[c] = t + 1;
        }
      }
    }

    // symptomatic agents and yesterday's notified agents, in id order
    for (AgentId i = 0; i < st_.size(); ++i) {
      if (st_.test_requested_at[i] == t) {
        requested_.push_back(i);
        st_.test_requested_at[i] = kNever;
      }
    }
    if (iv.testing.enabled || iv.quarantine.enabled) {
      requested_.insert(requested_.end(), symptomatic_.begin(), symptomatic_.end());
      std::sort(requested_.begin(), requested_.end());
      requested_.erase(std::unique(requested_.begin(), requested_.end()), requested_.end());
    }
    sample_tests(st_, requested_, iv.testing, t, rng_, ev);
  }

  void audit_step(Step t) const {
    for (AgentId i = 0; i < st_.size(); ++i) {
      const Stage was = before_[i];
      const Stage now = st_.disease_stage[i];
      if (was == Stage::Dead && now != Stage::Dead) {
        throw InvariantViolation("agent " + std::to_string(i) + " left Dead at step " + std::to_string(t));
      }
      if (now != Stage::Susceptible && now != Stage::Vaccinated && st_.infected_at[i] == kNever) {
        throw InvariantViolation("agent " + std::to_string(i) + " infected without infected_at");
      }
      if (st_.dose2_at[i] != kNever &&
          (st_.dose1_at[i] == kNever || st_.dose2_at[i] < st_.dose1_at[i] + params_->interventions.vaccination.dose_gap)) {
        throw InvariantViolation("agent " + std::to_string(i) + " received dose 2 early");
      }
    }
  }

  AgentColumns st_;
  std::shared_ptr<const ModelParams> params_;
  KeyedRng rng_;
  Step clock_;
  bool vaccination_started_ = false;
  bool audit_ = false;
  ContactLog contacts_;
  GatherScratch scratch_;
  std::vector<double> exposure_;
  std::vector<AgentId> symptomatic_;
  std::vector<AgentId> notified_;
  std::vector<AgentId> requested_;
  std::vector<Stage> before_;
};

}  // namespace epigraph

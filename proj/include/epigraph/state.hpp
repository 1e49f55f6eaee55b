#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "epigraph/types.hpp"

namespace epigraph {

// Per-agent state stored column-wise. Static columns are set once by the
// population synthesizer; dynamic columns change inside the engine step.
struct AgentColumns {
  std::size_t n_agents = 0;

  // static
  std::vector<std::uint8_t> age_group;     // 0..8
  std::vector<std::uint8_t> occupation;    // 1..23
  std::vector<std::uint32_t> household_id;
  std::vector<double> random_degree;
  std::vector<std::uint8_t> has_den_app;

  // dynamic
  std::vector<Stage> disease_stage;
  std::vector<Step> infected_at;
  std::vector<Step> next_transition_at;
  std::vector<Stage> next_stage;
  std::vector<Step> quarantine_start;
  std::vector<Step> quarantine_until;  // last quarantined step, inclusive
  std::vector<VaccineStatus> vaccine_status;
  std::vector<Step> dose1_at;
  std::vector<Step> dose2_at;
  std::vector<std::uint8_t> immune;
  std::vector<Step> test_sample_at;
  std::vector<Step> test_ready_at;
  std::vector<std::uint8_t> test_positive;
  std::vector<Step> test_requested_at;  // set by exposure notification

  explicit AgentColumns(std::size_t n = 0) { resize(n); }

  void resize(std::size_t n) {
    n_agents = n;
    age_group.assign(n, 0);
    occupation.assign(n, 1);
    household_id.assign(n, 0);
    random_degree.assign(n, 0.0);
    has_den_app.assign(n, 0);
    disease_stage.assign(n, Stage::Susceptible);
    infected_at.assign(n, kNever);
    next_transition_at.assign(n, kNever);
    next_stage.assign(n, Stage::Susceptible);
    quarantine_start.assign(n, kNever);
    quarantine_until.assign(n, kNever);
    vaccine_status.assign(n, VaccineStatus::PreVaccination);
    dose1_at.assign(n, kNever);
    dose2_at.assign(n, kNever);
    immune.assign(n, 0);
    test_sample_at.assign(n, kNever);
    test_ready_at.assign(n, kNever);
    test_positive.assign(n, 0);
    test_requested_at.assign(n, kNever);
  }

  std::size_t size() const noexcept { return n_agents; }

  bool quarantined(AgentId i) const noexcept { return quarantine_until[i] != kNever; }

  bool has_pending_test(AgentId i) const noexcept { return test_ready_at[i] != kNever; }

  std::array<std::int64_t, kStages> stage_counts() const noexcept {
    std::array<std::int64_t, kStages> counts{};
    for (Stage s : disease_stage) ++counts[index_of(s)];
    return counts;
  }
};

// What happened during one step.
struct StepEvents {
  std::int64_t new_infections = 0;
  std::int64_t hospitalizations = 0;
  std::int64_t icu_admissions = 0;
  std::int64_t deaths = 0;
  std::int64_t recoveries = 0;
  std::int64_t tests = 0;
  std::int64_t positive_results = 0;
  std::int64_t quarantines = 0;
  std::int64_t notifications = 0;
  std::int64_t first_doses = 0;
  std::int64_t second_doses = 0;
  std::int64_t interactions = 0;  // directed edges evaluated by the gather
};

}  // namespace epigraph

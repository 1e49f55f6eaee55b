#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "epigraph/interventions.hpp"

using namespace epigraph;

namespace {

struct Person {
  std::string name;
  int age_years;
  bool second_dose_due;
};

const std::vector<Person> kSix = {{"Adam", 78, false},   {"Betty", 78, true},   {"Charlie", 68, false},
                                  {"David", 68, true},   {"Eleanor", 40, false}, {"Frank", 40, true}};

AgentColumns six_agents(Step step, Step gap) {
  AgentColumns st(kSix.size());
  for (AgentId i = 0; i < st.size(); ++i) {
    st.age_group[i] = static_cast<std::uint8_t>(age_band_of_years(kSix[i].age_years));
    if (kSix[i].second_dose_due) {
      st.vaccine_status[i] = VaccineStatus::FirstDose;
      st.dose1_at[i] = step - gap;
    }
  }
  return st;
}

std::vector<std::string> order_names(DosingStrategy strategy) {
  VaccinePolicy p;
  p.strategy = strategy;
  const Step step = 100;
  const AgentColumns st = six_agents(step, p.dose_gap);
  std::vector<std::string> out;
  for (const auto& c : vaccination_priority_order(st, p, step)) out.push_back(kSix[c.agent].name);
  return out;
}

using Names = std::vector<std::string>;

}  // namespace

TEST(VaccinationOrder, StandardDosing) {
  EXPECT_EQ(order_names(DosingStrategy::StandardDosing),
            (Names{"Betty", "David", "Frank", "Adam", "Charlie", "Eleanor"}));
}

TEST(VaccinationOrder, DelayedSecondDose) {
  EXPECT_EQ(order_names(DosingStrategy::DelayedSecondDose),
            (Names{"Adam", "Charlie", "Eleanor", "Betty", "David", "Frank"}));
}

TEST(VaccinationOrder, DelayedExceptElderly) {
  EXPECT_EQ(order_names(DosingStrategy::DelayedExcept65Plus),
            (Names{"Adam", "Betty", "Charlie", "David", "Eleanor", "Frank"}));
}

TEST(VaccinationOrder, LimitKeepsThePrefix) {
  VaccinePolicy p;
  p.strategy = DosingStrategy::DelayedSecondDose;
  const AgentColumns st = six_agents(100, p.dose_gap);
  const auto full = vaccination_priority_order(st, p, 100);
  const auto top = vaccination_priority_order(st, p, 100, 4);
  ASSERT_EQ(top.size(), 4u);
  for (std::size_t k = 0; k < top.size(); ++k) EXPECT_EQ(top[k].agent, full[k].agent);
}

TEST(VaccinationOrder, SecondDoseWaitsForGap) {
  VaccinePolicy p;
  AgentColumns st(1);
  st.vaccine_status[0] = VaccineStatus::FirstDose;
  st.dose1_at[0] = 10;
  EXPECT_TRUE(vaccination_priority_order(st, p, 10 + p.dose_gap - 1).empty());
  EXPECT_EQ(vaccination_priority_order(st, p, 10 + p.dose_gap).size(), 1u);
  st.vaccine_status[0] = VaccineStatus::FullyVaccinated;
  EXPECT_TRUE(vaccination_priority_order(st, p, 100).empty());
}

TEST(VaccinationOrder, ExcludesDeadAndHospitalized) {
  VaccinePolicy p;
  AgentColumns st(4);
  st.disease_stage = {Stage::Dead, Stage::Hospitalized, Stage::CriticalICU, Stage::Recovered};
  const auto order = vaccination_priority_order(st, p, 1);
  ASSERT_EQ(order.size(), 1u);
  EXPECT_EQ(order[0].agent, 3u);
  p.susceptible_only = true;
  EXPECT_TRUE(vaccination_priority_order(st, p, 1).empty());
}

// The sort-key encoding agrees with a direct lexicographic comparison on
// random candidates.
TEST(VaccinationOrder, KeyMatchesLexicographicOrder) {
  const KeyedRng rng(17);
  for (auto strategy :
       {DosingStrategy::StandardDosing, DosingStrategy::DelayedSecondDose, DosingStrategy::DelayedExcept65Plus}) {
    VaccinePolicy p;
    p.strategy = strategy;
    const Step step = 200;
    AgentColumns st(3000);
    for (AgentId i = 0; i < st.size(); ++i) {
      st.age_group[i] = static_cast<std::uint8_t>(rng.uniform(0, i, Purpose::Test) * kAgeBands);
      if (rng.uniform(1, i, Purpose::Test) < 0.5) {
        st.vaccine_status[i] = VaccineStatus::FirstDose;
        st.dose1_at[i] = step - p.dose_gap;
      }
    }
    std::vector<AgentId> expected(st.size());
    for (AgentId i = 0; i < st.size(); ++i) expected[i] = i;
    const auto rank = [&](AgentId i) {
      const bool second = st.vaccine_status[i] == VaccineStatus::FirstDose;
      const bool elderly = st.age_group[i] >= p.elderly_min_age_band;
      int group = 0;
      if (strategy == DosingStrategy::StandardDosing) group = second ? 0 : 1;
      if (strategy == DosingStrategy::DelayedSecondDose) group = second ? 1 : 0;
      if (strategy == DosingStrategy::DelayedExcept65Plus) group = elderly ? 0 : (second ? 2 : 1);
      return std::make_tuple(group, -static_cast<int>(st.age_group[i]), second, i);
    };
    std::sort(expected.begin(), expected.end(), [&](AgentId a, AgentId b) { return rank(a) < rank(b); });
    const auto got = vaccination_priority_order(st, p, step);
    ASSERT_EQ(got.size(), expected.size());
    for (std::size_t k = 0; k < got.size(); ++k) ASSERT_EQ(got[k].agent, expected[k]) << "position " << k;
  }
}

TEST(Vaccination, DailyDoseBudget) {
  VaccinePolicy p;
  p.daily_rate = 0.003;
  EXPECT_EQ(p.daily_doses(20000), 60);
  p.daily_rate = 0.01;
  EXPECT_EQ(p.daily_doses(20000), 200);
  EXPECT_EQ(p.daily_doses(150), 2);
}

// After both doses the immune fraction is dose2_efficacy; after dose 1 only
// it is dose1_efficacy.
TEST(Vaccination, DoseEfficacyMarginals) {
  VaccinePolicy p;
  p.dose1_efficacy = 0.6;
  p.dose2_efficacy = 0.95;
  const std::size_t n = 100000;
  AgentColumns st(n);
  const KeyedRng rng(5);
  for (AgentId i = 0; i < n; ++i) {
    st.vaccine_status[i] = VaccineStatus::FullyVaccinated;
    st.dose1_at[i] = 1;
    st.dose2_at[i] = 1 + p.dose_gap;
  }
  std::size_t after_first = 0;
  for (Step t = 1; t <= 1 + p.dose_gap + 1; ++t) {
    realize_vaccine_immunity(st, p, t, rng);
    if (t == 1 + p.dose1_latency) {
      after_first = static_cast<std::size_t>(std::count(st.immune.begin(), st.immune.end(), 1));
    }
  }
  const auto immune = static_cast<double>(std::count(st.immune.begin(), st.immune.end(), 1));
  EXPECT_NEAR(static_cast<double>(after_first) / n, 0.6, 0.01);
  EXPECT_NEAR(immune / n, 0.95, 0.005);
  EXPECT_EQ(st.stage_counts()[index_of(Stage::Vaccinated)], static_cast<std::int64_t>(immune));
  EXPECT_DOUBLE_EQ(p.dose2_conditional(true), (0.95 - 0.6) / 0.4);
  EXPECT_DOUBLE_EQ(p.dose2_conditional(false), 0.95);
}

TEST(Vaccination, NonSterilizingKeepsStage) {
  VaccinePolicy p;
  p.immunity = ImmunityMode::NonSterilizing;
  p.dose1_efficacy = 1.0;
  AgentColumns st(3);
  st.disease_stage = {Stage::Susceptible, Stage::Asymptomatic, Stage::Susceptible};
  for (AgentId i = 0; i < 2; ++i) {
    st.vaccine_status[i] = VaccineStatus::FirstDose;
    st.dose1_at[i] = 1;
  }
  realize_vaccine_immunity(st, p, 1 + p.dose1_latency, KeyedRng(1));
  EXPECT_EQ(st.immune[0], 1);
  EXPECT_EQ(st.disease_stage[0], Stage::Susceptible);
  EXPECT_EQ(st.immune[2], 0);

  p.immunity = ImmunityMode::Sterilizing;
  AgentColumns st2 = st;
  st2.immune.assign(3, 0);
  realize_vaccine_immunity(st2, p, 1 + p.dose1_latency, KeyedRng(1));
  EXPECT_EQ(st2.disease_stage[0], Stage::Vaccinated);
  EXPECT_EQ(st2.disease_stage[1], Stage::Asymptomatic);
}

TEST(Vaccination, AdministerRespectsBudgetAndStart) {
  VaccinePolicy p;
  p.daily_rate = 0.01;
  AgentColumns st(1000);
  StepEvents ev;
  administer_vaccines(st, p, 1, false, KeyedRng(1), ev);
  EXPECT_EQ(ev.first_doses, 0);
  administer_vaccines(st, p, 2, true, KeyedRng(1), ev);
  EXPECT_EQ(ev.first_doses, 10);
  EXPECT_EQ(std::count(st.dose1_at.begin(), st.dose1_at.end(), 2), 10);
}

TEST(Testing, TurnaroundPresets) {
  EXPECT_EQ(TestKind::point_of_care().turnaround(0.999), 1);
  EXPECT_EQ(TestKind::antigen().turnaround(0.3), 2);
  const TestKind pcr = TestKind::rt_pcr();
  const KeyedRng rng(8);
  std::map<Step, int> counts;
  const int n = 90000;
  for (int i = 0; i < n; ++i) ++counts[pcr.turnaround(rng.uniform(0, static_cast<std::uint32_t>(i), Purpose::Test))];
  ASSERT_EQ(counts.size(), 3u);
  for (Step d = 3; d <= 5; ++d) EXPECT_NEAR(counts[d], n / 3.0, 4.0 * std::sqrt(n * (1.0 / 3) * (2.0 / 3)));
  EXPECT_THROW(TestKind::preset("saliva"), ConfigError);
}

TEST(Testing, DetectionProbability) {
  TestingConfig cfg;
  const std::size_t n = 50000;
  AgentColumns st(n);
  for (AgentId i = 0; i < n; i += 2) st.disease_stage[i] = Stage::MildSymptomatic;
  std::vector<AgentId> all(n);
  for (AgentId i = 0; i < n; ++i) all[i] = i;
  StepEvents ev;
  sample_tests(st, all, cfg, 1, KeyedRng(2), ev);
  EXPECT_EQ(ev.tests, static_cast<std::int64_t>(n));
  int pos_infected = 0, pos_clean = 0;
  for (AgentId i = 0; i < n; ++i) {
    ASSERT_GE(st.test_ready_at[i], 4);
    ASSERT_LE(st.test_ready_at[i], 6);
    (i % 2 == 0 ? pos_infected : pos_clean) += st.test_positive[i];
  }
  EXPECT_NEAR(pos_infected / (n / 2.0), 0.95, 0.01);
  EXPECT_EQ(pos_clean, 0);
  // a pending test blocks a new sample
  sample_tests(st, all, cfg, 2, KeyedRng(2), ev);
  EXPECT_EQ(ev.tests, static_cast<std::int64_t>(n));
}

TEST(Testing, ResultsDeliveredOnceOnTheirDay) {
  AgentColumns st(3);
  st.test_ready_at = {5, 5, 6};
  st.test_sample_at = {2, 2, 2};
  st.test_positive = {1, 0, 1};
  StepEvents ev;
  EXPECT_TRUE(deliver_results(st, 4, ev).empty());
  EXPECT_EQ(deliver_results(st, 5, ev), (std::vector<AgentId>{0}));
  EXPECT_FALSE(st.has_pending_test(0));
  EXPECT_FALSE(st.has_pending_test(1));
  EXPECT_TRUE(st.has_pending_test(2));
  EXPECT_EQ(ev.positive_results, 1);
}

TEST(Quarantine, FullDurationWithoutDropout) {
  QuarantineConfig cfg;
  cfg.dropout_prob = 0.0;
  AgentColumns st(1);
  StepEvents ev;
  start_quarantine(st, {0}, cfg, 10, ev);
  EXPECT_EQ(st.quarantine_until[0], 24);
  for (Step t = 10; t < 24; ++t) {
    expire_quarantine(st, cfg, t, KeyedRng(1));
    ASSERT_TRUE(st.quarantined(0)) << "step " << t;
  }
  expire_quarantine(st, cfg, 24, KeyedRng(1));
  EXPECT_FALSE(st.quarantined(0));
}

TEST(Quarantine, DropoutRateAndNoDropoutOnStartStep) {
  QuarantineConfig cfg;
  const std::size_t n = 100000;
  AgentColumns st(n);
  std::vector<AgentId> all(n);
  for (AgentId i = 0; i < n; ++i) all[i] = i;
  StepEvents ev;
  start_quarantine(st, all, cfg, 1, ev);
  expire_quarantine(st, cfg, 1, KeyedRng(3));
  for (AgentId i = 0; i < n; ++i) ASSERT_TRUE(st.quarantined(i));
  expire_quarantine(st, cfg, 2, KeyedRng(3));
  std::size_t left = 0;
  for (AgentId i = 0; i < n; ++i) left += st.quarantined(i) ? 0 : 1;
  EXPECT_NEAR(static_cast<double>(left) / n, 0.05, 0.003);
}

class ContactLogTest : public ::testing::Test {
 protected:
  void SetUp() override {
    st.resize(6);
    st.has_den_app = {1, 1, 0, 1, 1, 1};
  }
  StepGraph day(Step t, std::vector<std::pair<AgentId, AgentId>> pairs) {
    StepGraph g;
    g.step = t;
    for (auto [u, v] : pairs) g.add_undirected(u, v, NetworkKind::Random);
    return g;
  }
  AgentColumns st;
};

TEST_F(ContactLogTest, OnlyAppPairsInsideLookback) {
  ContactLog log(2);
  log.push(day(1, {{0, 5}}), st);
  log.push(day(2, {{0, 1}, {0, 2}}), st);
  log.push(day(3, {{0, 3}, {1, 3}}), st);
  EXPECT_EQ(log.size(), 2u);
  // day 1 has fallen out of the window; agent 2 has no app
  EXPECT_EQ(notify_contacts(0, log, st), (std::vector<AgentId>{1, 3}));
  st.quarantine_until[3] = 20;
  EXPECT_EQ(notify_contacts(0, log, st), (std::vector<AgentId>{1}));
  st.has_den_app[0] = 0;
  EXPECT_TRUE(notify_contacts(0, log, st).empty());
}

TEST(InterventionParse, ErrorsNameTheField) {
  const auto error = [](const Json& j) -> std::string {
    try {
      parse_interventions(JsonField(j, "interventions"));
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_EQ(error(Json::object()), "");
  EXPECT_NE(error({{"vaccination", {{"strategy", "random"}}}}).find("interventions.vaccination.strategy"),
            std::string::npos);
  EXPECT_NE(error({{"den", {{"compliance_prob", 1.5}}}}).find("interventions.den.compliance_prob"),
            std::string::npos);
  EXPECT_NE(error({{"testing", {{"kind", "saliva"}}}}), "");
  EXPECT_NE(error({{"quarantine", {{"duration", 0}}}}).find("interventions.quarantine.duration"), std::string::npos);
  const auto c = parse_interventions(JsonField(
      Json{{"vaccination", {{"enabled", true}, {"strategy", "delayed_except_65plus"}, {"immunity", "non_sterilizing"}}}},
      "interventions"));
  EXPECT_EQ(c.vaccination.strategy, DosingStrategy::DelayedExcept65Plus);
  EXPECT_EQ(c.vaccination.immunity, ImmunityMode::NonSterilizing);
  EXPECT_FALSE(c.testing_active());
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "epigraph/transmission.hpp"

using namespace epigraph;

namespace {

// Gamma density from its closed form.
double gamma_pdf(double x, double shape, double scale) {
  if (x <= 0.0) return 0.0;
  return std::exp((shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) - shape * std::log(scale));
}

// Composite Simpson integral of the density over [t - 1, t].
double quadrature_day_weight(int t, double mu, double sigma) {
  const double shape = mu * mu / (sigma * sigma);
  const double scale = sigma * sigma / mu;
  const int n = 4000;
  const double a = t - 1.0, h = 1.0 / n;
  double sum = gamma_pdf(a, shape, scale) + gamma_pdf(a + 1.0, shape, scale);
  for (int k = 1; k < n; ++k) sum += (k % 2 ? 4.0 : 2.0) * gamma_pdf(a + k * h, shape, scale);
  return sum * h / 3.0;
}

DiseaseParams unit_params() {
  DiseaseParams p;
  p.R = 2.0;
  p.susceptibility.fill(1.0);
  p.asymptomatic_scale = 1.0;
  p.network_scale = {1.0, 1.0, 1.0};
  p.mean_daily_interactions = 10.0;
  p.finalize();
  return p;
}

}  // namespace

TEST(InfectionProbability, ZeroHazardIsExactlyZero) { EXPECT_EQ(infection_probability(0.0), 0.0); }

TEST(InfectionProbability, Ln2IsOneHalf) { EXPECT_NEAR(infection_probability(std::log(2.0)), 0.5, 1e-12); }

TEST(InfectionProbability, SmallHazardExample) { EXPECT_NEAR(infection_probability(0.05), 0.048771, 1e-6); }

TEST(InfectionProbability, MonotoneAndBounded) {
  double prev = 0.0;
  for (double h = 0.01; h < 50.0; h *= 1.3) {
    const double p = infection_probability(h);
    EXPECT_GT(p, prev);
    EXPECT_LE(p, 1.0);
    prev = p;
  }
}

TEST(InfectionProbability, RejectsNegativeHazard) {
  EXPECT_THROW(infection_probability(-1e-9), InvariantViolation);
  EXPECT_THROW(infection_probability(std::nan("")), InvariantViolation);
}

TEST(DayWeights, TableCoversMassAndMatchesQuadrature) {
  const std::pair<double, double> pairs[] = {{5.0, 2.0}, {4.0, 2.0}, {6.0, 3.0}, {3.0, 1.0}, {7.0, 4.0}};
  for (auto [mu, sigma] : pairs) {
    const auto w = day_weight_table(mu, sigma);
    double mass = 0.0;
    for (double v : w) mass += v;
    EXPECT_GE(mass, 1.0 - 1e-6) << "mu=" << mu << " sigma=" << sigma;
    EXPECT_LE(mass, 1.0 + 1e-12);
    EXPECT_EQ(w[0], 0.0);
    for (std::size_t t = 1; t < w.size(); ++t) {
      EXPECT_NEAR(w[t], quadrature_day_weight(static_cast<int>(t), mu, sigma), 1e-8)
          << "mu=" << mu << " sigma=" << sigma << " t=" << t;
      EXPECT_EQ(w[t], day_weight(static_cast<int>(t), mu, sigma));
    }
    // the table stops at the first day with tail below the threshold
    const GammaShape g = gamma_from_moments(mu, sigma);
    const int last = static_cast<int>(w.size()) - 1;
    EXPECT_LT(1.0 - gamma_cdf(g, last), 1e-6);
    EXPECT_GE(1.0 - gamma_cdf(g, last - 1), 1e-6);
  }
}

TEST(DayWeights, GammaMomentsRoundTrip) {
  const GammaShape g = gamma_from_moments(5.0, 2.0);
  EXPECT_DOUBLE_EQ(g.shape * g.scale, 5.0);
  EXPECT_DOUBLE_EQ(std::sqrt(g.shape) * g.scale, 2.0);
  EXPECT_THROW(gamma_from_moments(0.0, 1.0), ConfigError);
  EXPECT_THROW(gamma_from_moments(1.0, 0.0), ConfigError);
}

TEST(EdgeHazard, FormulaExample) {
  DiseaseParams p = unit_params();
  // force w(1) = 0.25 to check the product
  p.day_weights = {0.0, 0.25};
  EXPECT_NEAR(edge_hazard(1, InfectorClass::Symptomatic, 0, NetworkKind::Household, p), 0.05, 1e-15);
  EXPECT_EQ(edge_hazard(2, InfectorClass::Symptomatic, 0, NetworkKind::Household, p), 0.0);
  EXPECT_EQ(edge_hazard(0, InfectorClass::Symptomatic, 0, NetworkKind::Household, p), 0.0);
  EXPECT_EQ(edge_hazard(1, InfectorClass::NotInfectious, 0, NetworkKind::Household, p), 0.0);
}

TEST(EdgeHazard, LinearInEachScaleFactor) {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> pos(0.05, 4.0);
  std::uniform_int_distribution<int> band(0, kAgeBands - 1), kind(0, kNetworkKinds - 1), day(1, 10);
  for (int trial = 0; trial < 1000; ++trial) {
    DiseaseParams p;
    p.R = pos(gen);
    for (double& s : p.susceptibility) s = pos(gen);
    p.asymptomatic_scale = pos(gen);
    for (double& b : p.network_scale) b = pos(gen);
    p.mean_daily_interactions = 1.0 + pos(gen) * 5.0;
    p.infectiousness_mean = 2.0 + pos(gen);
    p.infectiousness_sd = 0.5 + pos(gen) / 2.0;
    p.finalize();
    const int a = band(gen);
    const auto n = static_cast<NetworkKind>(kind(gen));
    const int t = std::min(day(gen), p.max_day());
    const auto cls = trial % 2 ? InfectorClass::Symptomatic : InfectorClass::AsymptomaticLike;
    const double base = edge_hazard(t, cls, a, n, p);
    const double expected = p.R * p.susceptibility[a] * (trial % 2 ? 1.0 : p.asymptomatic_scale) *
                            p.network_scale[index_of(n)] / p.mean_daily_interactions *
                            day_weight(t, p.infectiousness_mean, p.infectiousness_sd);
    ASSERT_NEAR(base, expected, 1e-14 * std::max(1.0, expected));

    const double c = pos(gen);
    const auto scaled = [&](auto mutate) {
      DiseaseParams q = p;
      mutate(q);
      q.finalize();
      return edge_hazard(t, cls, a, n, q);
    };
    const double tol = 1e-12 * std::max(1.0, c * base);
    ASSERT_NEAR(scaled([&](DiseaseParams& q) { q.R *= c; }), c * base, tol);
    ASSERT_NEAR(scaled([&](DiseaseParams& q) { q.susceptibility[a] *= c; }), c * base, tol);
    ASSERT_NEAR(scaled([&](DiseaseParams& q) { q.network_scale[index_of(n)] *= c; }), c * base, tol);
    ASSERT_NEAR(scaled([&](DiseaseParams& q) { q.mean_daily_interactions /= c; }), c * base, tol);
    if (cls == InfectorClass::AsymptomaticLike) {
      ASSERT_NEAR(scaled([&](DiseaseParams& q) { q.asymptomatic_scale *= c; }), c * base, tol);
    }
  }
}

TEST(DiseaseParams, ParseReportsFieldPath) {
  Json j = {{"R", 1.0},
            {"susceptibility_by_age", std::vector<double>(kAgeBands, 1.0)},
            {"asymptomatic_scale", 0.5},
            {"network_scale", {{"household", 1.0}, {"occupation", 1.0}, {"random", 1.0}}},
            {"mean_daily_interactions", 10.0},
            {"infectiousness_mean", 5.0},
            {"infectiousness_sd", 2.0}};
  const DiseaseParams p = parse_disease_params(JsonField(j, "disease"));
  EXPECT_GT(p.max_day(), 10);
  j["susceptibility_by_age"] = std::vector<double>(8, 1.0);
  try {
    parse_disease_params(JsonField(j, "disease"));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("disease.susceptibility_by_age"), std::string::npos) << e.what();
  }
  j["susceptibility_by_age"] = std::vector<double>(kAgeBands, 1.0);
  j["R"] = -1.0;
  EXPECT_THROW(parse_disease_params(JsonField(j, "disease")), ConfigError);
}

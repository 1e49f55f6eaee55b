#pragma once

// Per-interaction infection hazard and its conversion to a probability.
//
//   hazard(t, infector, age, network) =
//       R * S[age] * A[infector] * B[network] / I_mean * w(t)
//   w(t) = F(t) - F(t - 1),  F the gamma CDF with mean mu and sd sigma
//   P(infection) = 1 - exp(-hazard)
//
// The infectiousness curve is tabulated once; t counts whole days since the
// infector was infected.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "epigraph/json_util.hpp"
#include "epigraph/types.hpp"

namespace epigraph {

struct GammaShape {
  double shape;
  double scale;
};

// Gamma with mean mu and standard deviation sigma.
inline GammaShape gamma_from_moments(double mu, double sigma) {
  if (!(mu > 0.0) || !(sigma > 0.0)) {
    throw ConfigError("infectiousness curve needs mean > 0 and sd > 0");
  }
  return {mu * mu / (sigma * sigma), sigma * sigma / mu};
}

inline double gamma_cdf(const GammaShape& g, double x) {
  return x <= 0.0 ? 0.0 : boost::math::gamma_p(g.shape, x / g.scale);
}

// Probability mass of the infectiousness curve on day t (t >= 1).
inline double day_weight(int t, double mu, double sigma) {
  const GammaShape g = gamma_from_moments(mu, sigma);
  if (t < 1) throw std::invalid_argument("day_weight: t must be >= 1");
  return gamma_cdf(g, t) - gamma_cdf(g, t - 1);
}

// w(1..T) where T is the first day whose remaining tail mass is below
// `tail`. Entry 0 is unused and zero.
inline std::vector<double> day_weight_table(double mu, double sigma, double tail = 1e-6) {
  const GammaShape g = gamma_from_moments(mu, sigma);
  std::vector<double> w{0.0};
  for (int t = 1;; ++t) {
    w.push_back(gamma_cdf(g, t) - gamma_cdf(g, t - 1));
    if (1.0 - gamma_cdf(g, t) < tail) break;
    if (t > 100000) throw ConfigError("infectiousness curve tail does not converge");
  }
  return w;
}

inline double infection_probability(double hazard) {
  if (hazard < 0.0 || std::isnan(hazard)) {
    throw InvariantViolation("infection_probability: negative hazard");
  }
  return -std::expm1(-hazard);
}

struct DiseaseParams {
  double R = 1.0;
  std::array<double, kAgeBands> susceptibility{};
  double asymptomatic_scale = 1.0;
  std::array<double, kNetworkKinds> network_scale{1.0, 1.0, 1.0};
  double mean_daily_interactions = 1.0;
  double infectiousness_mean = 5.0;
  double infectiousness_sd = 2.0;

  // Derived by finalize().
  std::vector<double> day_weights;
  // R * S[a] * A * B[n] / I_mean, evaluated left to right.
  std::array<std::array<std::array<double, kNetworkKinds>, 3>, kAgeBands> coefficient{};

  int max_day() const noexcept { return static_cast<int>(day_weights.size()) - 1; }

  double weight(int t) const noexcept {
    return (t >= 1 && t <= max_day()) ? day_weights[static_cast<std::size_t>(t)] : 0.0;
  }

  double class_scale(InfectorClass c) const noexcept {
    switch (c) {
      case InfectorClass::AsymptomaticLike:
        return asymptomatic_scale;
      case InfectorClass::Symptomatic:
        return 1.0;
      default:
        return 0.0;
    }
  }

  void finalize() {
    if (R < 0.0 || asymptomatic_scale < 0.0) throw ConfigError("disease: scale factors must be >= 0");
    for (double s : susceptibility) {
      if (s < 0.0) throw ConfigError("disease: susceptibility must be >= 0");
    }
    for (double b : network_scale) {
      if (b < 0.0) throw ConfigError("disease: network scale must be >= 0");
    }
    if (!(mean_daily_interactions > 0.0)) throw ConfigError("disease: mean_daily_interactions must be > 0");
    day_weights = day_weight_table(infectiousness_mean, infectiousness_sd);
    for (int a = 0; a < kAgeBands; ++a) {
      for (int c = 0; c < 3; ++c) {
        for (int n = 0; n < kNetworkKinds; ++n) {
          coefficient[a][c][n] = R * susceptibility[a] * class_scale(static_cast<InfectorClass>(c)) *
                                 network_scale[n] / mean_daily_interactions;
        }
      }
    }
  }
};

// Hazard of a single interaction. Zero for non-infectious infectors and for
// days outside the tabulated curve.
inline double edge_hazard(int days_since_infection, InfectorClass infector, int age_band,
                          NetworkKind kind, const DiseaseParams& p) {
  return p.coefficient[age_band][static_cast<int>(infector)][index_of(kind)] *
         p.weight(days_since_infection);
}

inline DiseaseParams parse_disease_params(const JsonField& j) {
  DiseaseParams p;
  p.R = j["R"].number_at_least(0.0);
  const auto s = j["susceptibility_by_age"].numbers(kAgeBands, 0.0);
  std::copy(s.begin(), s.end(), p.susceptibility.begin());
  p.asymptomatic_scale = j["asymptomatic_scale"].number_at_least(0.0);
  const JsonField b = j["network_scale"];
  p.network_scale = {b["household"].number_at_least(0.0), b["occupation"].number_at_least(0.0),
                     b["random"].number_at_least(0.0)};
  p.mean_daily_interactions = j["mean_daily_interactions"].number();
  if (!(p.mean_daily_interactions > 0.0)) j["mean_daily_interactions"].fail("must be > 0");
  p.infectiousness_mean = j["infectiousness_mean"].number();
  p.infectiousness_sd = j["infectiousness_sd"].number();
  if (!(p.infectiousness_mean > 0.0)) j["infectiousness_mean"].fail("must be > 0");
  if (!(p.infectiousness_sd > 0.0)) j["infectiousness_sd"].fail("must be > 0");
  p.finalize();
  return p;
}

}  // namespace epigraph

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace epigraph {

inline constexpr int kAgeBands = 9;
inline constexpr int kOccupations = 23;
inline constexpr int kNetworkKinds = 3;
inline constexpr int kStages = 11;

using AgentId = std::uint32_t;
using Step = std::int32_t;
inline constexpr Step kNever = -1;

// Bad input: files, fields, values. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A model invariant failed during a run. Maps to CLI exit code 2.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Stage : std::uint8_t {
  Susceptible = 0,
  Asymptomatic,
  PresymptomaticMild,
  PresymptomaticSevere,
  MildSymptomatic,
  SevereSymptomatic,
  Hospitalized,
  CriticalICU,
  Recovered,
  Vaccinated,
  Dead,
};

enum class NetworkKind : std::uint8_t { Household = 0, Occupation = 1, Random = 2 };

enum class VaccineStatus : std::uint8_t { PreVaccination = 0, FirstDose, FullyVaccinated };

// How an agent in a given stage transmits.
enum class InfectorClass : std::uint8_t { NotInfectious = 0, AsymptomaticLike, Symptomatic };

inline constexpr std::array<std::string_view, kStages> kStageNames = {
    "susceptible",       "asymptomatic",       "presymptomatic_mild",
    "presymptomatic_severe", "mild_symptomatic", "severe_symptomatic",
    "hospitalized",      "critical_icu",       "recovered",
    "vaccinated",        "dead"};

inline constexpr std::array<std::string_view, kNetworkKinds> kNetworkNames = {
    "household", "occupation", "random"};

constexpr int index_of(Stage s) noexcept { return static_cast<int>(s); }
constexpr int index_of(NetworkKind k) noexcept { return static_cast<int>(k); }

constexpr std::string_view name_of(Stage s) noexcept { return kStageNames[index_of(s)]; }

inline std::optional<Stage> parse_stage(std::string_view name) noexcept {
  for (int i = 0; i < kStages; ++i) {
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  }
  return std::nullopt;
}

constexpr bool is_absorbing(Stage s) noexcept {
  return s == Stage::Recovered || s == Stage::Dead || s == Stage::Vaccinated;
}

// Currently carrying the infection.
constexpr bool is_infected(Stage s) noexcept {
  return s >= Stage::Asymptomatic && s <= Stage::CriticalICU;
}

constexpr bool is_symptomatic(Stage s) noexcept {
  return s == Stage::MildSymptomatic || s == Stage::SevereSymptomatic;
}

// Hospitalized and ICU agents are isolated in care and do not transmit in
// community networks.
constexpr InfectorClass infector_class(Stage s) noexcept {
  switch (s) {
    case Stage::Asymptomatic:
    case Stage::PresymptomaticMild:
    case Stage::PresymptomaticSevere:
      return InfectorClass::AsymptomaticLike;
    case Stage::MildSymptomatic:
    case Stage::SevereSymptomatic:
      return InfectorClass::Symptomatic;
    default:
      return InfectorClass::NotInfectious;
  }
}

// Age band of an age in years: 0-10, 11-20, ..., 71-80, 80+.
constexpr int age_band_of_years(int years) noexcept {
  if (years <= 10) return 0;
  const int band = (years - 1) / 10;
  return band >= kAgeBands - 1 ? kAgeBands - 1 : band;
}

}  // namespace epigraph

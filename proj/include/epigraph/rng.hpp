#pragma once

// Counter-based random numbers.
//
// Every random decision in a replication is a pure function of
// (replication seed, step, agent or stream id, purpose, index), evaluated
// through Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as
// 1, 2, 3", SC 2011). Two implementations that ask the same question get the
// same answer regardless of evaluation order or thread count.

#include <array>
#include <cstdint>
#include <limits>

namespace epigraph {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter apply(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeylA;
        key[1] += kWeylB;
      }
      ctr = one_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMulA = 0xD2511F53u;
  static constexpr std::uint32_t kMulB = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
  static constexpr std::uint32_t kWeylB = 0xBB67AE85u;

  static constexpr Counter one_round(const Counter& c, const Key& k) noexcept {
    const std::uint64_t p0 = std::uint64_t{kMulA} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMulB} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

// Tags separating independent uses of the keyed stream. Values are part of
// the reproducibility contract: renumbering changes every trajectory.
enum class Purpose : std::uint32_t {
  Infection = 1,
  InfectionBranch = 2,
  ProgressionBranch = 3,
  ProgressionDelay = 4,
  TestResult = 5,
  TestTurnaround = 6,
  QuarantineDropout = 7,
  DenCompliance = 8,
  VaccineDose1Immunity = 9,
  VaccineDose2Immunity = 10,
  EdgeInfection = 11,
  AppAdoption = 12,
  SeedInfections = 13,
  PopulationAge = 14,
  PopulationHousehold = 15,
  PopulationOccupation = 16,
  GraphOccupation = 17,
  GraphRandom = 18,
  ReplicationSeed = 19,
  Test = 1000,
};

inline std::uint64_t to_u64(const Philox4x32::Counter& out) noexcept {
  return (std::uint64_t{out[0]} << 32) | out[1];
}

// Maps 52 random bits onto the open interval (0, 1).
inline double bits_to_open01(std::uint64_t bits) noexcept {
  constexpr double kScale = 1.0 / 4503599627370496.0;  // 2^-52
  return (static_cast<double>(bits >> 12) + 0.5) * kScale;
}

// Stateless keyed draws.
class KeyedRng {
 public:
  KeyedRng() = default;
  explicit KeyedRng(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)} {}

  std::uint64_t seed() const noexcept {
    return (std::uint64_t{key_[1]} << 32) | key_[0];
  }

  std::uint64_t bits(std::uint32_t step, std::uint32_t id, Purpose purpose,
                     std::uint32_t index = 0) const noexcept {
    return to_u64(Philox4x32::apply(
        {step, id, static_cast<std::uint32_t>(purpose), index}, key_));
  }

  double uniform(std::uint32_t step, std::uint32_t id, Purpose purpose,
                 std::uint32_t index = 0) const noexcept {
    return bits_to_open01(bits(step, id, purpose, index));
  }

 private:
  Philox4x32::Key key_{0, 0};
};

// Sequential stream over one (seed, step, id, purpose) tuple; the draw index
// is the running counter. Satisfies UniformRandomBitGenerator.
class KeyedStream {
 public:
  using result_type = std::uint64_t;

  KeyedStream(const KeyedRng& rng, std::uint32_t step, std::uint32_t id,
              Purpose purpose) noexcept
      : rng_(rng), step_(step), id_(id), purpose_(purpose) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    return rng_.bits(step_, id_, purpose_, next_++);
  }

  double uniform() noexcept { return bits_to_open01((*this)()); }

  // Unbiased integer in [0, bound) by rejection (Lemire). bound > 0.
  std::uint64_t below(std::uint64_t bound) noexcept {
    for (;;) {
      const unsigned __int128 m =
          static_cast<unsigned __int128>((*this)()) * bound;
      const auto low = static_cast<std::uint64_t>(m);
      if (low >= bound || low >= (-bound) % bound) {
        return static_cast<std::uint64_t>(m >> 64);
      }
    }
  }

 private:
  KeyedRng rng_;
  std::uint32_t step_;
  std::uint32_t id_;
  Purpose purpose_;
  std::uint32_t next_ = 0;
};

// Seed of replication `index` under `base_seed`.
inline std::uint64_t derive_seed(std::uint64_t base_seed,
                                 std::uint64_t index) noexcept {
  const KeyedRng rng(base_seed);
  return rng.bits(static_cast<std::uint32_t>(index >> 32),
                  static_cast<std::uint32_t>(index), Purpose::ReplicationSeed);
}

}  // namespace epigraph

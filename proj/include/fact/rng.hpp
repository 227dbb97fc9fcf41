#pragma once

// Counter-based random streams.
//
// Every random draw in the simulator is a pure function of
//   (master seed, domain, stream, index, block)
// fed through Philox4x32-10 (Salmon et al., SC'11). The key is the 64-bit
// master seed; the 128-bit counter is
//
//   word 0: block   (increments as a single stream consumes more output)
//   word 1: index   low 32 bits  (trial number, step number, ...)
//   word 2: stream  (agent index)
//   word 3: domain  (8 bits) | index high 24 bits
//
// so trial t of agent j in domain d is reproducible regardless of which worker
// evaluates it or in what order.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace fact::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

namespace detail {

inline constexpr std::uint32_t kM0 = 0xD2511F53u;
inline constexpr std::uint32_t kM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kW1 = 0xBB67AE85u;

constexpr void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                       std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace detail

constexpr Counter philox4x32_10(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += detail::kW0;
      key[1] += detail::kW1;
    }
    std::uint32_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
    detail::mulhilo(detail::kM0, ctr[0], hi0, lo0);
    detail::mulhilo(detail::kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

enum class Domain : std::uint8_t {
  kTripleGrouping = 1,
  kSyntheticCompetition = 2,
  kSyntheticPool = 3,
  kGradientNoise = 4,
  kVarianceProbe = 5,
  kParameterDraws = 6,
  kTieBreak = 7,
};

// One reproducible stream. Cheap to construct; holds no shared state.
class Stream {
 public:
  Stream(std::uint64_t seed, Domain domain, std::uint32_t stream,
         std::uint64_t index)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        base_{0u, static_cast<std::uint32_t>(index), stream,
              (static_cast<std::uint32_t>(domain) << 24) |
                  static_cast<std::uint32_t>((index >> 32) & 0xFFFFFFu)} {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform() {
    const std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = 0;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  // Box-Muller; implemented here rather than via <random> so that streams are
  // bit-identical across standard library implementations.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  void refill() {
    Counter ctr = base_;
    ctr[0] = block_++;
    buf_ = philox4x32_10(ctr, key_);
    pos_ = 0;
  }

  Key key_;
  Counter base_;
  Counter buf_{};
  std::uint32_t block_ = 0;
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fact::rng

#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace fastswitch {

/// Philox4x32-10 counter-based block function (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

/// Purpose of a derived stream. Each (seed, path, role) triple owns a disjoint
/// slice of the Philox counter space, so streams never overlap.
enum class StreamRole : std::uint8_t {
  modulator = 0,
  wiener = 1,
  chain = 2,
  thinning = 3,
  baseline = 4,
  baseline_alt = 5,
  sampling = 6,
};

/// A reproducible random stream. Satisfies UniformRandomBitGenerator and adds
/// the handful of variates the simulators need. The variates are computed here
/// rather than through <random> distributions because the latter are
/// implementation-defined, and output must not depend on the standard library.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t path, StreamRole role);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  // Uniform on the open interval (0, 1), 53 bits of resolution.
  double uniform();
  double normal();
  double exponential(double rate);
  double gamma(double shape, double scale);

  std::uint64_t blocks_consumed() const { return block_; }

 private:
  void refill();

  PhiloxKey key_{};
  std::uint32_t path_lo_ = 0;
  std::uint32_t path_hi_role_ = 0;
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  int next_word_ = 4;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace fastswitch

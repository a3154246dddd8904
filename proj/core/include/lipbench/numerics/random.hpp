#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace lipbench {

/// Counter-based pseudo-random stream (SplitMix64 output function over a
/// keyed counter).
///
/// Every experiment component derives its own named sub-stream through
/// split(), so draws in one component never shift draws in another. Equal
/// seeds give bit-identical sequences on one platform. Satisfies
/// UniformRandomBitGenerator, so standard distributions accept it.
class RandomSource {
 public:
  using result_type = std::uint64_t;

  explicit RandomSource(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Independent child stream keyed by (this key, label). Does not advance
  /// this stream.
  RandomSource split(std::string_view label) const;
  RandomSource split(std::uint64_t index) const;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, bound). bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound);

  /// Standard normal draw (Box-Muller, both outputs consumed in order).
  double normal();

  bool coin() { return ((*this)() >> 63) != 0; }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  RandomSource(std::uint64_t key, int /*raw*/) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace lipbench

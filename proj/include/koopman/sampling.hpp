#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "koopman/system.hpp"

namespace koopman {

/// Seeded generator with platform-independent conversions (the standard
/// distributions are implementation defined, the engine is not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform on {0, ..., n-1}.
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

 private:
  std::mt19937_64 engine_;
};

/// Mixes a base seed with a tag (e.g. a check id) so that independent
/// consumers draw independent streams.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

State sample_state(const StateSpace& space, Rng& rng);
InputId sample_input(const InputSet& inputs, Rng& rng);
/// Prefix length uniform on [0, prefix_max], period length on [1, period_max].
InputSequence sample_sequence(const InputSet& inputs, Rng& rng, std::size_t prefix_max,
                              std::size_t period_max);

/// Every eventually periodic sequence with prefix length <= prefix_max and
/// period length in [1, period_max], enumerated by lengths then lexicographically.
std::vector<InputSequence> enumerate_sequences(const InputSet& inputs, std::size_t prefix_max,
                                               std::size_t period_max);

/// Every word over the inputs of length <= max_length, shortest first.
std::vector<std::vector<InputId>> enumerate_words(const InputSet& inputs, std::size_t max_length);

}  // namespace koopman

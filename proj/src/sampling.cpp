#include "koopman/sampling.hpp"

namespace koopman {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// All words of exactly `length` letters, lexicographic.
void words_of_length(std::size_t n_inputs, std::size_t length,
                     std::vector<std::vector<InputId>>& out) {
  std::vector<InputId> w(length, InputId{0});
  while (true) {
    out.push_back(w);
    std::size_t i = length;
    while (i > 0) {
      --i;
      if (++w[i].value < n_inputs) break;
      w[i].value = 0;
      if (i == 0) return;
    }
    if (length == 0) return;
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ splitmix64(h));
}

State sample_state(const StateSpace& space, Rng& rng) {
  if (space.is_finite()) return State::finite(rng.below(space.size()));
  std::vector<double> c(space.dimension());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = rng.uniform(space.lower()[i], space.upper()[i]);
  return State::real(std::move(c));
}

InputId sample_input(const InputSet& inputs, Rng& rng) { return InputId{rng.below(inputs.size())}; }

InputSequence sample_sequence(const InputSet& inputs, Rng& rng, std::size_t prefix_max,
                              std::size_t period_max) {
  const std::size_t p = rng.below(prefix_max + 1);
  const std::size_t q = 1 + rng.below(std::max<std::size_t>(period_max, 1));
  std::vector<InputId> prefix, period;
  for (std::size_t i = 0; i < p; ++i) prefix.push_back(sample_input(inputs, rng));
  for (std::size_t i = 0; i < q; ++i) period.push_back(sample_input(inputs, rng));
  return InputSequence(std::move(prefix), std::move(period));
}

std::vector<InputSequence> enumerate_sequences(const InputSet& inputs, std::size_t prefix_max,
                                               std::size_t period_max) {
  std::vector<InputSequence> out;
  for (std::size_t p = 0; p <= prefix_max; ++p) {
    std::vector<std::vector<InputId>> prefixes;
    words_of_length(inputs.size(), p, prefixes);
    for (std::size_t q = 1; q <= period_max; ++q) {
      std::vector<std::vector<InputId>> periods;
      words_of_length(inputs.size(), q, periods);
      for (const auto& pre : prefixes)
        for (const auto& per : periods) out.emplace_back(pre, per);
    }
  }
  return out;
}

std::vector<std::vector<InputId>> enumerate_words(const InputSet& inputs, std::size_t max_length) {
  std::vector<std::vector<InputId>> out;
  for (std::size_t len = 0; len <= max_length; ++len) words_of_length(inputs.size(), len, out);
  return out;
}

}  // namespace koopman

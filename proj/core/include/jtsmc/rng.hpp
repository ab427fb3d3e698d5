#pragma once

#include <cstdint>
#include <limits>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace jtsmc {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: the i-th output is a bijective mix of (key, i).
///
/// Streams are addressed by a key rather than by state, so the stream for
/// (seed, step, particle) can be opened anywhere without coordination.
/// Satisfies UniformRandomBitGenerator; use the boost distributions on top of
/// it, which are portable across standard libraries.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  constexpr CounterRng() = default;
  constexpr explicit CounterRng(std::uint64_t key) : key_(key) {}

  /// Stream keyed by an arbitrary tuple of 64-bit words.
  template <typename... Words>
  static constexpr CounterRng stream(std::uint64_t seed, Words... words) {
    std::uint64_t k = mix64(seed);
    ((k = mix64(k ^ mix64(static_cast<std::uint64_t>(words) + 0x632be59bd9b4e019ULL))), ...);
    return CounterRng(k);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    return mix64(key_ ^ mix64(counter_++ * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
  }

  constexpr std::uint64_t key() const { return key_; }
  constexpr std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_ = 0x853c49e6748fea9bULL;
  std::uint64_t counter_ = 0;
};

/// Uniform integer in [0, n).
template <typename Rng>
std::size_t uniform_index(Rng& rng, std::size_t n) {
  return boost::random::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

template <typename Rng>
bool bernoulli(Rng& rng, double p) {
  return boost::random::bernoulli_distribution<double>(p)(rng);
}

template <typename Rng>
double uniform01(Rng& rng) {
  return boost::random::uniform_01<double>()(rng);
}

}  // namespace jtsmc

#pragma once

#include <cstdint>
#include <iterator>
#include <random>
#include <utility>

namespace coevo {

/// SplitMix64 finaliser. Used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seeded random source shared by every model in the library.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The distributions below are implemented here rather than taken
/// from <random>, since the standard library distributions are not required
/// to produce the same values across implementations. Together this makes
/// every run bit-reproducible on any conforming toolchain.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal deviate (Marsaglia polar method).
  double normal();

  template <std::random_access_iterator It>
  void shuffle(It first, It last) {
    auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      auto j = below(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

  /// Independent child stream; does not advance this generator.
  Rng split(std::uint64_t stream) const;

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace coevo

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "coevo/errors.hpp"
#include "coevo/rng.hpp"

namespace coevo {

/// Fixed-length binary trait vector: one point on the N-dimensional hypercube.
class Genotype {
 public:
  Genotype() = default;
  explicit Genotype(std::size_t n) : bits_(n, 0) {}
  /// Throws ParameterError if any allele is not 0 or 1.
  explicit Genotype(std::vector<std::uint8_t> bits);

  /// Bit i of `index` becomes the allele at locus i.
  static Genotype from_index(std::size_t n, std::uint64_t index);
  std::uint64_t to_index() const;

  std::size_t size() const { return bits_.size(); }
  std::uint8_t operator[](std::size_t locus) const { return bits_[locus]; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  void flip(std::size_t locus) { bits_[locus] ^= 1U; }
  Genotype flipped(std::size_t locus) const {
    Genotype g = *this;
    g.flip(locus);
    return g;
  }

  friend bool operator==(const Genotype&, const Genotype&) = default;
  friend auto operator<=>(const Genotype&, const Genotype&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

Genotype random_genotype(std::size_t n, Rng& rng);

/// The N genotypes at Hamming distance one, in locus order.
std::vector<Genotype> one_mutant_neighbors(const Genotype& g);

enum class NeighborScheme { random, adjacent };
enum class WalkRule { random_fitter, greedy };

/// Kauffman NK landscape. Immutable after construction.
///
/// Locus i reads its own allele and the alleles of K other loci. The local
/// configuration indexes a table of 2^(K+1) contributions drawn i.i.d. from
/// U[0,1); fitness is the mean contribution. The own allele is the most
/// significant bit of the configuration, followed by the neighbors in the
/// order stored in `neighbors(i)`.
class NKLandscape {
 public:
  static NKLandscape build(std::size_t n, std::size_t k, std::uint64_t seed,
                           NeighborScheme scheme = NeighborScheme::random);

  /// Landscape from explicit neighbor lists and tables (validated).
  static NKLandscape from_tables(std::vector<std::vector<std::size_t>> neighbors,
                                 std::vector<std::vector<double>> tables);

  std::size_t n() const { return neighbors_.size(); }
  std::size_t k() const { return k_; }
  std::uint64_t seed() const { return seed_; }
  NeighborScheme scheme() const { return scheme_; }

  std::span<const std::size_t> neighbors(std::size_t locus) const { return neighbors_[locus]; }
  std::span<const double> table(std::size_t locus) const { return tables_[locus]; }

  double contribution(std::size_t locus, const Genotype& g) const;
  double fitness(const Genotype& g) const;
  /// Fitness of Genotype::from_index(n(), index) without materialising it.
  double fitness_of_index(std::uint64_t index) const;

 private:
  NKLandscape() = default;

  std::size_t k_ = 0;
  std::uint64_t seed_ = 0;
  NeighborScheme scheme_ = NeighborScheme::random;
  std::vector<std::vector<std::size_t>> neighbors_;
  std::vector<std::vector<double>> tables_;
};

/// Draws K distinct loci other than `locus` from [0, n).
std::vector<std::size_t> draw_distinct_others(std::size_t n, std::size_t count,
                                              std::size_t locus, Rng& rng);

/// Picks a strictly fitter one-mutant neighbor of `g` under `rule`.
///
/// `fit(locus)` returns the fitness after flipping `locus`. Sets `tie` when
/// some neighbor has exactly the current fitness. Returns the locus to flip,
/// or nothing at a local optimum.
template <class NeighborFitness>
std::optional<std::size_t> pick_fitter_neighbor(std::size_t n, double current,
                                                NeighborFitness&& fit, WalkRule rule,
                                                Rng& rng, bool& tie) {
  tie = false;
  std::vector<std::size_t> fitter;
  std::optional<std::size_t> best;
  double best_fitness = current;
  for (std::size_t locus = 0; locus < n; ++locus) {
    const double f = fit(locus);
    if (f == current) tie = true;
    if (f > current) {
      fitter.push_back(locus);
      if (f > best_fitness) {
        best_fitness = f;
        best = locus;
      }
    }
  }
  if (fitter.empty()) return std::nullopt;
  if (rule == WalkRule::greedy) return best;
  return fitter[rng.below(fitter.size())];
}

struct WalkStep {
  Genotype genotype;
  double fitness;
};

struct Walk {
  std::vector<WalkStep> trajectory;
  bool terminated_at_optimum = false;
  /// The endpoint has a neighbor of exactly equal fitness.
  bool tie_at_end = false;

  std::size_t steps() const { return trajectory.empty() ? 0 : trajectory.size() - 1; }
  const WalkStep& end() const { return trajectory.back(); }
};

Walk adaptive_walk(const NKLandscape& landscape, const Genotype& start, WalkRule rule,
                   Rng& rng);

struct LocalOptima {
  std::vector<Genotype> optima;  // ascending by genotype index
  bool ties = false;
};

inline constexpr std::size_t kMaxEnumerableLoci = 24;

/// Exhaustive scan of all 2^N genotypes. Throws CapacityError when N > 24.
LocalOptima enumerate_local_optima(const NKLandscape& landscape);

}  // namespace coevo

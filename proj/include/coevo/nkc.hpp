#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "coevo/nk_landscape.hpp"

namespace coevo {

/// One genotype per species.
using Profile = std::vector<Genotype>;

/// Who each species reads its C external inputs from.
///  - ring: species s reads from species (s+1) mod S.
///  - all_to_one: every species reads from species 0; species 0 reads from 1.
enum class CouplingTopology { ring, all_to_one };

enum class TurnOrder { round_robin, random };

/// S coupled NK landscapes. Each locus of species s reads its own allele, K
/// internal loci, and C loci of its partner species through one extended
/// table of 2^(K+C+1) uniform contributions. Immutable after construction.
class NKCSystem {
 public:
  static NKCSystem build(std::size_t species, std::size_t n, std::size_t k, std::size_t c,
                         std::uint64_t seed,
                         CouplingTopology topology = CouplingTopology::ring,
                         NeighborScheme scheme = NeighborScheme::random);

  std::size_t species() const { return partner_.size(); }
  std::size_t n() const { return n_; }
  std::size_t k() const { return k_; }
  std::size_t c() const { return c_; }
  std::uint64_t seed() const { return seed_; }
  CouplingTopology topology() const { return topology_; }

  std::size_t partner(std::size_t s) const { return partner_[s]; }
  std::span<const std::size_t> internal_inputs(std::size_t s, std::size_t locus) const {
    return internal_[s][locus];
  }
  std::span<const std::size_t> external_inputs(std::size_t s, std::size_t locus) const {
    return external_[s][locus];
  }
  std::span<const double> table(std::size_t s, std::size_t locus) const {
    return tables_[s][locus];
  }

  /// Random starting genotypes drawn at construction.
  const Profile& initial_profile() const { return initial_; }

  /// Fitness of species `s` given everyone's current genotype.
  double fitness(std::size_t s, const Profile& profile) const;
  /// Fitness of species `s` if it played `own` against `profile`.
  double fitness_as(std::size_t s, const Genotype& own, const Profile& profile) const;

  void validate_profile(const Profile& profile) const;

 private:
  NKCSystem() = default;

  std::size_t n_ = 0, k_ = 0, c_ = 0;
  std::uint64_t seed_ = 0;
  CouplingTopology topology_ = CouplingTopology::ring;
  std::vector<std::size_t> partner_;
  std::vector<std::vector<std::vector<std::size_t>>> internal_;
  std::vector<std::vector<std::vector<std::size_t>>> external_;
  std::vector<std::vector<std::vector<double>>> tables_;
  Profile initial_;
};

/// True iff no species has a strictly fitter one-mutant move with the others fixed.
bool nash_check(const NKCSystem& system, const Profile& profile);

struct CoevolutionResult {
  /// Number of individual moves until a Nash profile; empty if max_steps ran out.
  std::optional<std::size_t> steps_to_nash;
  std::size_t moves = 0;
  Profile profile;
  /// Some species sat at a tied neighbor when the run stopped.
  bool tie_at_end = false;
};

/// Asynchronous coupled adaptive walks. Species take turns in passes (fixed
/// order, or a fresh permutation per pass); on its turn a species makes at
/// most one strictly improving one-mutant move. A pass without any move is a
/// Nash equilibrium.
CoevolutionResult coevolution_run(const NKCSystem& system, const Profile& start, TurnOrder order,
                                  std::size_t max_steps, Rng& rng,
                                  WalkRule rule = WalkRule::random_fitter);

inline CoevolutionResult coevolution_run(const NKCSystem& system, TurnOrder order,
                                         std::size_t max_steps, Rng& rng,
                                         WalkRule rule = WalkRule::random_fitter) {
  return coevolution_run(system, system.initial_profile(), order, max_steps, rng, rule);
}

}  // namespace coevo

#include "coevo/nkc.hpp"

#include <numeric>
#include <string>

namespace coevo {

NKCSystem NKCSystem::build(std::size_t species, std::size_t n, std::size_t k, std::size_t c,
                           std::uint64_t seed, CouplingTopology topology,
                           NeighborScheme scheme) {
  if (species < 2) throw ParameterError("S must be at least 2");
  if (n == 0) throw ParameterError("N must be positive");
  if (k >= n) throw ParameterError("K out of range: need 0 <= K <= N-1");
  if (c > n) throw ParameterError("C out of range: need 0 <= C <= N");
  if (k + c + 1 >= 8 * sizeof(std::size_t) - 1)
    throw ParameterError("K + C too large for table indexing");

  NKCSystem sys;
  sys.n_ = n;
  sys.k_ = k;
  sys.c_ = c;
  sys.seed_ = seed;
  sys.topology_ = topology;
  sys.partner_.resize(species);
  for (std::size_t s = 0; s < species; ++s) {
    if (topology == CouplingTopology::ring)
      sys.partner_[s] = (s + 1) % species;
    else
      sys.partner_[s] = s == 0 ? 1 : 0;
  }

  Rng rng(seed);
  const std::size_t rows = std::size_t{1} << (k + c + 1);
  sys.internal_.assign(species, std::vector<std::vector<std::size_t>>(n));
  sys.external_.assign(species, std::vector<std::vector<std::size_t>>(n));
  sys.tables_.assign(species, std::vector<std::vector<double>>(n));
  for (std::size_t s = 0; s < species; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      if (scheme == NeighborScheme::adjacent) {
        for (std::size_t j = 1; j <= k; ++j) sys.internal_[s][i].push_back((i + j) % n);
        for (std::size_t j = 0; j < c; ++j) sys.external_[s][i].push_back((i + j) % n);
      } else {
        sys.internal_[s][i] = draw_distinct_others(n, k, i, rng);
        // `n` as the excluded locus means any partner locus may be drawn.
        sys.external_[s][i] = draw_distinct_others(n, c, n, rng);
      }
    }
  }
  for (std::size_t s = 0; s < species; ++s)
    for (std::size_t i = 0; i < n; ++i) {
      sys.tables_[s][i].resize(rows);
      for (auto& v : sys.tables_[s][i]) v = rng.uniform();
    }

  Rng start_rng = rng.split(0x5157A27);
  sys.initial_.reserve(species);
  for (std::size_t s = 0; s < species; ++s) sys.initial_.push_back(random_genotype(n, start_rng));
  return sys;
}

void NKCSystem::validate_profile(const Profile& profile) const {
  if (profile.size() != species())
    throw ParameterError("profile must hold one genotype per species");
  for (const auto& g : profile)
    if (g.size() != n_) throw ParameterError("profile genotype length does not match N");
}

double NKCSystem::fitness_as(std::size_t s, const Genotype& own, const Profile& profile) const {
  const Genotype& other = profile[partner_[s]];
  double sum = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    std::size_t cfg = own[i];
    for (auto j : internal_[s][i]) cfg = (cfg << 1) | own[j];
    for (auto j : external_[s][i]) cfg = (cfg << 1) | other[j];
    sum += tables_[s][i][cfg];
  }
  return sum / static_cast<double>(n_);
}

double NKCSystem::fitness(std::size_t s, const Profile& profile) const {
  return fitness_as(s, profile[s], profile);
}

bool nash_check(const NKCSystem& system, const Profile& profile) {
  system.validate_profile(profile);
  for (std::size_t s = 0; s < system.species(); ++s) {
    const double f = system.fitness(s, profile);
    for (std::size_t i = 0; i < system.n(); ++i)
      if (system.fitness_as(s, profile[s].flipped(i), profile) > f) return false;
  }
  return true;
}

CoevolutionResult coevolution_run(const NKCSystem& system, const Profile& start, TurnOrder order,
                                  std::size_t max_steps, Rng& rng, WalkRule rule) {
  if (max_steps == 0) throw ParameterError("max_steps must be positive");
  system.validate_profile(start);

  CoevolutionResult result;
  result.profile = start;
  Profile& profile = result.profile;
  std::vector<std::size_t> turn(system.species());
  std::iota(turn.begin(), turn.end(), std::size_t{0});

  for (;;) {
    if (order == TurnOrder::random) rng.shuffle(turn.begin(), turn.end());
    bool moved = false;
    bool any_tie = false;
    for (auto s : turn) {
      const double f = system.fitness(s, profile);
      bool tie = false;
      auto move = pick_fitter_neighbor(
          system.n(), f,
          [&](std::size_t locus) {
            return system.fitness_as(s, profile[s].flipped(locus), profile);
          },
          rule, rng, tie);
      any_tie = any_tie || tie;
      if (!move) continue;
      if (result.moves == max_steps) {
        result.tie_at_end = any_tie;
        return result;
      }
      profile[s].flip(*move);
      ++result.moves;
      moved = true;
    }
    if (!moved) {
      result.steps_to_nash = result.moves;
      result.tie_at_end = any_tie;
      return result;
    }
  }
}

}  // namespace coevo

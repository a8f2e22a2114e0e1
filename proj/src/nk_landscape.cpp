#include "coevo/nk_landscape.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <string>

namespace coevo {

Genotype::Genotype(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_) {
    if (b > 1) throw ParameterError("genotype allele must be 0 or 1");
  }
}

Genotype Genotype::from_index(std::size_t n, std::uint64_t index) {
  if (n > 64) throw ParameterError("genotype index supports at most 64 loci");
  Genotype g(n);
  for (std::size_t i = 0; i < n; ++i) g.bits_[i] = static_cast<std::uint8_t>((index >> i) & 1U);
  return g;
}

std::uint64_t Genotype::to_index() const {
  if (bits_.size() > 64) throw ParameterError("genotype index supports at most 64 loci");
  std::uint64_t index = 0;
  for (std::size_t i = 0; i < bits_.size(); ++i) index |= std::uint64_t{bits_[i]} << i;
  return index;
}

Genotype random_genotype(std::size_t n, Rng& rng) {
  std::vector<std::uint8_t> bits(n);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng.below(2));
  return Genotype(std::move(bits));
}

std::vector<Genotype> one_mutant_neighbors(const Genotype& g) {
  std::vector<Genotype> out;
  out.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out.push_back(g.flipped(i));
  return out;
}

std::vector<std::size_t> draw_distinct_others(std::size_t n, std::size_t count,
                                              std::size_t locus, Rng& rng) {
  std::vector<std::size_t> pool;
  pool.reserve(n);
  for (std::size_t j = 0; j < n; ++j)
    if (j != locus) pool.push_back(j);
  if (count > pool.size()) throw ParameterError("not enough distinct loci to draw from");
  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    auto j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

NKLandscape NKLandscape::build(std::size_t n, std::size_t k, std::uint64_t seed,
                               NeighborScheme scheme) {
  if (n == 0) throw ParameterError("N must be positive");
  if (k >= n) throw ParameterError("K out of range: need 0 <= K <= N-1");
  if (k + 1 >= 8 * sizeof(std::size_t)) throw ParameterError("K too large for table indexing");

  NKLandscape land;
  land.k_ = k;
  land.seed_ = seed;
  land.scheme_ = scheme;
  land.neighbors_.resize(n);
  land.tables_.resize(n);

  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    if (scheme == NeighborScheme::adjacent) {
      for (std::size_t j = 1; j <= k; ++j) land.neighbors_[i].push_back((i + j) % n);
    } else {
      land.neighbors_[i] = draw_distinct_others(n, k, i, rng);
    }
  }
  const std::size_t rows = std::size_t{1} << (k + 1);
  for (std::size_t i = 0; i < n; ++i) {
    land.tables_[i].resize(rows);
    for (auto& v : land.tables_[i]) v = rng.uniform();
  }
  return land;
}

NKLandscape NKLandscape::from_tables(std::vector<std::vector<std::size_t>> neighbors,
                                     std::vector<std::vector<double>> tables) {
  const std::size_t n = neighbors.size();
  if (n == 0) throw ParameterError("N must be positive");
  if (tables.size() != n) throw ParameterError("one table per locus required");
  const std::size_t k = neighbors.front().size();
  if (k >= n) throw ParameterError("K out of range: need 0 <= K <= N-1");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nb = neighbors[i];
    if (nb.size() != k) throw ParameterError("every locus needs exactly K neighbors");
    for (std::size_t j = 0; j < k; ++j) {
      if (nb[j] >= n || nb[j] == i) throw ParameterError("invalid neighbor locus");
      if (std::find(nb.begin(), nb.begin() + static_cast<std::ptrdiff_t>(j), nb[j]) !=
          nb.begin() + static_cast<std::ptrdiff_t>(j))
        throw ParameterError("neighbor loci must be distinct");
    }
    if (tables[i].size() != (std::size_t{1} << (k + 1)))
      throw ParameterError("table for locus " + std::to_string(i) + " needs 2^(K+1) entries");
    for (double v : tables[i])
      if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("table entries must lie in [0,1]");
  }
  NKLandscape land;
  land.k_ = k;
  land.neighbors_ = std::move(neighbors);
  land.tables_ = std::move(tables);
  return land;
}

double NKLandscape::contribution(std::size_t locus, const Genotype& g) const {
  std::size_t cfg = g[locus];
  for (auto j : neighbors_[locus]) cfg = (cfg << 1) | g[j];
  return tables_[locus][cfg];
}

double NKLandscape::fitness(const Genotype& g) const {
  if (g.size() != n()) throw ParameterError("genotype length does not match landscape N");
  double sum = 0.0;
  for (std::size_t i = 0; i < n(); ++i) sum += contribution(i, g);
  return sum / static_cast<double>(n());
}

double NKLandscape::fitness_of_index(std::uint64_t index) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < n(); ++i) {
    std::size_t cfg = (index >> i) & 1U;
    for (auto j : neighbors_[i]) cfg = (cfg << 1) | ((index >> j) & 1U);
    sum += tables_[i][cfg];
  }
  return sum / static_cast<double>(n());
}

Walk adaptive_walk(const NKLandscape& landscape, const Genotype& start, WalkRule rule,
                   Rng& rng) {
  Walk walk;
  Genotype g = start;
  double f = landscape.fitness(g);
  walk.trajectory.push_back({g, f});
  for (;;) {
    bool tie = false;
    auto move = pick_fitter_neighbor(
        landscape.n(), f, [&](std::size_t locus) { return landscape.fitness(g.flipped(locus)); },
        rule, rng, tie);
    if (!move) {
      walk.terminated_at_optimum = true;
      walk.tie_at_end = tie;
      return walk;
    }
    g.flip(*move);
    f = landscape.fitness(g);
    walk.trajectory.push_back({g, f});
  }
}

LocalOptima enumerate_local_optima(const NKLandscape& landscape) {
  const std::size_t n = landscape.n();
  if (n > kMaxEnumerableLoci)
    throw CapacityError("local optima enumeration is limited to N <= 24");
  const std::uint64_t count = std::uint64_t{1} << n;

  // Walk the hypercube in Gray-code order, keeping every locus's table row
  // current by XOR. Summation stays in locus order so each value matches
  // NKLandscape::fitness exactly.
  const std::size_t k = landscape.k();
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> dependents(n);
  for (std::size_t i = 0; i < n; ++i) {
    dependents[i].emplace_back(i, std::size_t{1} << k);
    auto nb = landscape.neighbors(i);
    for (std::size_t j = 0; j < nb.size(); ++j)
      dependents[nb[j]].emplace_back(i, std::size_t{1} << (k - 1 - j));
  }
  std::vector<std::size_t> cfg(n, 0);
  std::vector<std::span<const double>> tables(n);
  for (std::size_t i = 0; i < n; ++i) tables[i] = landscape.table(i);

  std::vector<double> fit(count);
  const double n_loci = static_cast<double>(n);
  std::uint64_t gray = 0;
  for (std::uint64_t step = 0; step < count; ++step) {
    if (step > 0) {
      const auto bit = static_cast<std::size_t>(std::countr_zero(step));
      gray ^= std::uint64_t{1} << bit;
      for (auto [locus, mask] : dependents[bit]) cfg[locus] ^= mask;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += tables[i][cfg[i]];
    fit[gray] = sum / n_loci;
  }

  LocalOptima result;
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    const double f = fit[idx];
    bool optimum = true;
    bool tie = false;
    for (std::size_t i = 0; i < n; ++i) {
      const double nf = fit[idx ^ (std::uint64_t{1} << i)];
      if (nf > f) {
        optimum = false;
        break;
      }
      if (nf == f) tie = true;
    }
    if (optimum) {
      result.optima.push_back(Genotype::from_index(n, idx));
      result.ties = result.ties || tie;
    }
  }
  return result;
}

}  // namespace coevo

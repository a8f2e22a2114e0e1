#include "coevo/meta_ga.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace coevo::ga {

void RateBounds::validate() const {
  if (!(min > 0.0 && min <= max && max <= 1.0))
    throw ParameterError("rate bounds must satisfy 0 < rate_min <= rate_max <= 1");
}

double decode_rate(std::uint8_t gene, const RateBounds& bounds) {
  if (gene == 0) return bounds.min;
  if (gene == 255) return bounds.max;
  const double r = bounds.min * std::pow(bounds.max / bounds.min, gene / 255.0);
  return std::clamp(r, bounds.min, bounds.max);
}

Rates decode_rates(const MetaChromosome& c, const RateBounds& bounds) {
  return {decode_rate(c.meta[kMutationGene], bounds), decode_rate(c.meta[kCrossoverGene], bounds),
          decode_rate(c.meta[kInversionGene], bounds)};
}

MetaChromosome random_chromosome(std::size_t n, Rng& rng) {
  if (n == 0 || n > 65535) throw ParameterError("chromosome length must lie in 1..65535");
  MetaChromosome c;
  c.payload.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    c.payload[i] = {static_cast<std::uint16_t>(i), static_cast<std::uint8_t>(rng.below(2))};
  rng.shuffle(c.payload.begin(), c.payload.end());
  for (auto& g : c.meta) g = static_cast<std::uint8_t>(rng.below(256));
  return c;
}

bool labels_are_permutation(const MetaChromosome& c) {
  std::vector<bool> seen(c.size(), false);
  for (const auto& p : c.payload) {
    if (p.locus >= c.size() || seen[p.locus]) return false;
    seen[p.locus] = true;
  }
  return true;
}

Genotype to_genotype(const MetaChromosome& c, std::size_t n) {
  if (c.size() != n || !labels_are_permutation(c))
    throw ParameterError("payload locus labels must be a permutation of 0..N-1");
  std::vector<std::uint8_t> bits(n);
  for (const auto& p : c.payload) bits[p.locus] = p.allele;
  return Genotype(std::move(bits));
}

double payload_fitness(const MetaChromosome& c, const NKLandscape& landscape) {
  return landscape.fitness(to_genotype(c, landscape.n()));
}

void invert_segment(MetaChromosome& c, std::size_t first, std::size_t last) {
  if (first > last || last >= c.size()) throw ParameterError("inversion segment out of range");
  std::reverse(c.payload.begin() + static_cast<std::ptrdiff_t>(first),
               c.payload.begin() + static_cast<std::ptrdiff_t>(last) + 1);
}

MetaChromosome inversion(MetaChromosome c, Rng& rng) {
  if (c.size() < 2) return c;
  auto i = rng.below(c.size());
  auto j = rng.below(c.size());
  if (i > j) std::swap(i, j);
  invert_segment(c, i, j);
  return c;
}

std::pair<MetaChromosome, MetaChromosome> crossover_at(const MetaChromosome& a,
                                                       const MetaChromosome& b, std::size_t cut) {
  const std::size_t n = a.size();
  if (b.size() != n) throw ParameterError("crossover parents must have the same length");
  if (cut > n + kMetaGenes) throw ParameterError("crossover cut out of range");

  std::vector<std::uint8_t> allele_a(n), allele_b(n);
  for (const auto& p : a.payload) allele_a[p.locus] = p.allele;
  for (const auto& p : b.payload) allele_b[p.locus] = p.allele;
  std::vector<bool> from_prefix(n, false);
  for (std::size_t i = 0; i < std::min(cut, n); ++i) from_prefix[a.payload[i].locus] = true;

  MetaChromosome one = a, two = b;
  for (auto& p : one.payload) p.allele = from_prefix[p.locus] ? allele_a[p.locus] : allele_b[p.locus];
  for (auto& p : two.payload) p.allele = from_prefix[p.locus] ? allele_b[p.locus] : allele_a[p.locus];
  const std::size_t meta_cut = cut > n ? cut - n : 0;
  for (std::size_t g = 0; g < kMetaGenes; ++g) {
    one.meta[g] = g < meta_cut ? a.meta[g] : b.meta[g];
    two.meta[g] = g < meta_cut ? b.meta[g] : a.meta[g];
  }
  return {std::move(one), std::move(two)};
}

std::pair<MetaChromosome, MetaChromosome> crossover(const MetaChromosome& a,
                                                    const MetaChromosome& b,
                                                    const RateBounds& bounds, Rng& rng) {
  const double chi =
      0.5 * (decode_rates(a, bounds).crossover + decode_rates(b, bounds).crossover);
  if (!rng.bernoulli(chi)) return {a, b};
  const std::size_t cut = 1 + rng.below(a.size() + kMetaGenes - 1);
  return crossover_at(a, b, cut);
}

MetaChromosome self_adaptive_mutate(MetaChromosome c, const RateBounds& bounds, Rng& rng) {
  const double mu_meta = decode_rate(c.meta[kMutationGene], bounds);
  for (auto& g : c.meta)
    for (unsigned bit = 0; bit < 8; ++bit)
      if (rng.bernoulli(mu_meta)) g = static_cast<std::uint8_t>(g ^ (1U << bit));
  const double mu_payload = decode_rate(c.meta[kMutationGene], bounds);
  for (auto& p : c.payload)
    if (rng.bernoulli(mu_payload)) p.allele ^= 1U;
  return c;
}

void MetaGaConfig::validate() const {
  bounds.validate();
  if (n == 0) throw ParameterError("N must be positive");
  if (k >= n) throw ParameterError("K out of range: need 0 <= K <= N-1");
  if (population == 0 || population % 2 != 0)
    throw ParameterError("population must be positive and even");
  if (generations == 0) throw ParameterError("generations must be at least 1");
  if (!(selection_floor > 0.0)) throw ParameterError("selection floor must be positive");
}

MetaGaResult run_meta_ga(const MetaGaConfig& config) {
  config.validate();
  return run_meta_ga(config, NKLandscape::build(config.n, config.k, config.seed, config.scheme));
}

MetaGaResult run_meta_ga(const MetaGaConfig& config, const NKLandscape& landscape) {
  config.validate();
  if (landscape.n() != config.n) throw ParameterError("landscape N does not match config N");

  Rng rng = Rng(config.seed).split(1);
  const std::size_t pop = config.population;
  std::vector<MetaChromosome> current;
  current.reserve(pop);
  for (std::size_t i = 0; i < pop; ++i) current.push_back(random_chromosome(config.n, rng));

  MetaGaResult result;
  result.history.reserve(config.generations);
  std::vector<double> fitness(pop);
  std::vector<double> cumulative(pop);
  for (std::size_t gen = 0; gen < config.generations; ++gen) {
    GenerationStats stats;
    stats.generation = gen;
    std::size_t best = 0;
    for (std::size_t i = 0; i < pop; ++i) {
      fitness[i] = payload_fitness(current[i], landscape);
      const auto r = decode_rates(current[i], config.bounds);
      stats.mean_fitness += fitness[i];
      stats.mean_mutation += r.mutation;
      stats.mean_crossover += r.crossover;
      stats.mean_inversion += r.inversion;
      if (fitness[i] > fitness[best]) best = i;
    }
    const double p = static_cast<double>(pop);
    stats.best_fitness = fitness[best];
    stats.mean_fitness /= p;
    stats.mean_mutation /= p;
    stats.mean_crossover /= p;
    stats.mean_inversion /= p;
    result.history.push_back(stats);
    if (gen + 1 == config.generations) break;

    double total = 0.0;
    for (std::size_t i = 0; i < pop; ++i) {
      total += std::max(fitness[i], config.selection_floor);
      cumulative[i] = total;
    }
    auto spin = [&]() -> const MetaChromosome& {
      const double x = rng.uniform() * total;
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
      auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), pop - 1);
      return current[idx];
    };

    std::vector<MetaChromosome> next;
    next.reserve(pop);
    while (next.size() < pop) {
      const MetaChromosome& mother = spin();
      const MetaChromosome& father = spin();
      auto [one, two] = crossover(mother, father, config.bounds, rng);
      for (auto* child : {&one, &two}) {
        if (rng.bernoulli(decode_rates(*child, config.bounds).inversion))
          *child = inversion(std::move(*child), rng);
        *child = self_adaptive_mutate(std::move(*child), config.bounds, rng);
      }
      next.push_back(std::move(one));
      next.push_back(std::move(two));
    }
    if (config.elitism) next[0] = current[best];
    current = std::move(next);
  }
  result.final_population = std::move(current);
  return result;
}

}  // namespace coevo::ga

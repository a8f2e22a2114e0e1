#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "coevo/nk_landscape.hpp"

namespace coevo::ga {

struct LabeledAllele {
  std::uint16_t locus;
  std::uint8_t allele;

  friend bool operator==(const LabeledAllele&, const LabeledAllele&) = default;
};

enum MetaGene : std::size_t { kMutationGene = 0, kCrossoverGene = 1, kInversionGene = 2 };
inline constexpr std::size_t kMetaGenes = 3;
inline constexpr std::size_t kMetaBits = 8 * kMetaGenes;

/// Payload of (locus, allele) pairs in arbitrary order, followed by three
/// 8-bit genes that set the chromosome's own mutation, crossover and
/// inversion rates.
struct MetaChromosome {
  std::vector<LabeledAllele> payload;
  std::array<std::uint8_t, kMetaGenes> meta{};

  std::size_t size() const { return payload.size(); }
  friend bool operator==(const MetaChromosome&, const MetaChromosome&) = default;
};

struct RateBounds {
  double min = 1e-4;
  double max = 0.5;

  void validate() const;
};

struct Rates {
  double mutation;
  double crossover;
  double inversion;
};

/// Log-uniform map of an 8-bit gene onto [min, max].
double decode_rate(std::uint8_t gene, const RateBounds& bounds);
Rates decode_rates(const MetaChromosome& c, const RateBounds& bounds);

/// Random chromosome: shuffled locus order, random alleles and meta genes.
MetaChromosome random_chromosome(std::size_t n, Rng& rng);

/// Alleles sorted by locus label. Throws ParameterError unless the labels
/// are a permutation of 0..n-1.
Genotype to_genotype(const MetaChromosome& c, std::size_t n);
bool labels_are_permutation(const MetaChromosome& c);

double payload_fitness(const MetaChromosome& c, const NKLandscape& landscape);

/// Reverses payload positions [first, last] inclusive.
void invert_segment(MetaChromosome& c, std::size_t first, std::size_t last);
/// Reverses a uniformly chosen contiguous segment.
MetaChromosome inversion(MetaChromosome c, Rng& rng);

/// Deterministic one-point crossover over payload positions followed by the
/// three meta genes; `cut` ranges over 0..n+3. Child one takes parent a's
/// alleles for the loci in a's first `cut` positions and b's alleles for the
/// rest, laid out in a's order; child two is the complement in b's order.
/// Meta genes before the cut come from the same parent as the payload prefix.
std::pair<MetaChromosome, MetaChromosome> crossover_at(const MetaChromosome& a,
                                                       const MetaChromosome& b, std::size_t cut);

/// Applies crossover_at with probability equal to the parents' mean decoded
/// crossover rate, with the cut drawn from 1..n+2; otherwise returns copies.
std::pair<MetaChromosome, MetaChromosome> crossover(const MetaChromosome& a,
                                                    const MetaChromosome& b,
                                                    const RateBounds& bounds, Rng& rng);

/// Flips each of the 24 meta bits with the current decoded mutation rate,
/// then each payload allele with the rate decoded from the updated genes.
MetaChromosome self_adaptive_mutate(MetaChromosome c, const RateBounds& bounds, Rng& rng);

struct MetaGaConfig {
  std::size_t n = 16;
  std::size_t k = 0;
  std::size_t population = 100;
  std::size_t generations = 300;
  std::uint64_t seed = 1;
  RateBounds bounds;
  NeighborScheme scheme = NeighborScheme::random;
  bool elitism = false;
  double selection_floor = 1e-9;

  void validate() const;
};

struct GenerationStats {
  std::size_t generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  double mean_mutation = 0.0;
  double mean_crossover = 0.0;
  double mean_inversion = 0.0;
};

struct MetaGaResult {
  std::vector<GenerationStats> history;
  std::vector<MetaChromosome> final_population;
};

/// Generational GA on the NK landscape built from (n, k, seed). Each
/// generation: evaluate, roulette selection, crossover, inversion with
/// probability iota per child, self-adaptive mutation, replace.
MetaGaResult run_meta_ga(const MetaGaConfig& config);
MetaGaResult run_meta_ga(const MetaGaConfig& config, const NKLandscape& landscape);

}  // namespace coevo::ga

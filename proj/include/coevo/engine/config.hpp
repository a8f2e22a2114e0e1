#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "coevo/meta_ga.hpp"
#include "coevo/nk_landscape.hpp"
#include "coevo/nkc.hpp"
#include "coevo/wb_market.hpp"

namespace coevo::engine {

enum class ExperimentKind { nk_walk, nk_optima, nkc_coevolve, wb_run, metaga_run };

inline constexpr ExperimentKind kAllKinds[] = {ExperimentKind::nk_walk, ExperimentKind::nk_optima,
                                               ExperimentKind::nkc_coevolve, ExperimentKind::wb_run,
                                               ExperimentKind::metaga_run};

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(std::string_view name);

/// Raised for malformed, out-of-range or unknown configuration keys. `key()`
/// is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct NkWalkParams {
  std::size_t n = 12;
  std::size_t k = 3;
  NeighborScheme scheme = NeighborScheme::random;
  WalkRule rule = WalkRule::random_fitter;
  std::size_t walks = 100;
};

struct NkOptimaParams {
  std::size_t n = 8;
  std::size_t k = 7;
  NeighborScheme scheme = NeighborScheme::random;
};

/// Every combination of the listed S, K and C values is one grid cell.
struct NkcParams {
  std::size_t n = 8;
  std::vector<std::size_t> species{2, 4, 8};
  std::vector<std::size_t> k{1, 3, 5, 7};
  std::vector<std::size_t> c{0, 2, 4};
  CouplingTopology topology = CouplingTopology::ring;
  TurnOrder order = TurnOrder::random;
  WalkRule rule = WalkRule::random_fitter;
  NeighborScheme scheme = NeighborScheme::random;
  std::size_t max_steps = 20000;
  std::size_t runs = 1;  // runs per cell per replicate
};

struct WbParams {
  wb::MarketParams market;
  std::size_t periods = 200;
  std::size_t window = 10;
  double substitution_threshold = 0.9;
  double lockout_threshold = 0.1;

  wb::OutcomeRule outcome_rule() const;
};

struct MetaGaParams {
  std::size_t n = 16;
  std::size_t k = 0;
  std::size_t population = 100;
  std::size_t generations = 300;
  ga::RateBounds bounds;
  NeighborScheme scheme = NeighborScheme::random;
  bool elitism = false;
  double selection_floor = 1e-9;

  ga::MetaGaConfig to_ga_config(std::uint64_t seed) const;
};

using KindParams = std::variant<NkWalkParams, NkOptimaParams, NkcParams, WbParams, MetaGaParams>;

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::nk_walk;
  std::size_t replicates = 1;
  std::uint64_t base_seed = 1;
  std::string output = "out";
  std::size_t workers = 1;
  KindParams params;
};

ExperimentConfig default_config(ExperimentKind kind);

/// Strict parse: unknown keys are errors, missing keys take the defaults.
/// `kind` may be omitted when `expected` is given; if both are present they
/// must agree.
ExperimentConfig parse_config(const nlohmann::json& doc,
                              std::optional<ExperimentKind> expected = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<ExperimentKind> expected = std::nullopt);

nlohmann::json to_json(const ExperimentConfig& config);

/// {"<kind>": <default config>, ...} for every kind.
nlohmann::json defaults_document();

}  // namespace coevo::engine

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "coevo/engine/config.hpp"

namespace coevo::engine {

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// Everything one replicate produced. Replaying its config with `seed`
/// reproduces it exactly.
struct RunLog {
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  nlohmann::json config;
  Table series;   // per period / generation / walk / grid cell
  Table summary;  // exactly one row
  std::optional<std::string> outcome;
};

RunLog run_replicate(const ExperimentConfig& config, std::size_t replicate, std::uint64_t seed);

struct BatchOptions {
  /// Overrides config.workers.
  std::optional<std::size_t> workers;
  /// Give every replicate base_seed instead of base_seed + i.
  bool same_seed = false;
};

/// A replicate failed. Logs of the replicates that did finish are kept.
class BatchError : public std::runtime_error {
 public:
  BatchError(const std::string& what, std::vector<std::optional<RunLog>> partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const std::vector<std::optional<RunLog>>& partial() const { return partial_; }

 private:
  std::vector<std::optional<RunLog>> partial_;
};

/// Replicate i runs with seed base_seed + i. Replicates may run on several
/// threads; the result is always ordered by replicate index.
std::vector<RunLog> run_batch(const ExperimentConfig& config, const BatchOptions& options = {});

}  // namespace coevo::engine

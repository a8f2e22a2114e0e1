#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>

#include "coevo/engine/batch.hpp"

namespace coevo::engine {

/// Shortest round-trip decimal for doubles, plain integers, RFC 4180 quoting
/// for strings that need it.
std::string format_cell(const Cell& cell);

/// Series rows of every log, prefixed with replicate and seed columns.
void write_series_csv(std::span<const RunLog> logs, std::ostream& out);
/// One row per replicate.
void write_summary_csv(std::span<const RunLog> logs, std::ostream& out);
void write_summary_text(std::span<const RunLog> logs, const ExperimentConfig& config,
                        std::ostream& out);

struct ReportPaths {
  std::filesystem::path series;
  std::filesystem::path summary;
  std::filesystem::path text;
};

/// Writes <kind>_series.csv, <kind>_summary.csv and <kind>_summary.txt into
/// `dir`, creating it if needed. Throws std::runtime_error on I/O failure.
ReportPaths write_reports(std::span<const RunLog> logs, const ExperimentConfig& config,
                          const std::filesystem::path& dir);

}  // namespace coevo::engine

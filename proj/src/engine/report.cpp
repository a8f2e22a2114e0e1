#include "coevo/engine/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace coevo::engine {

namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& prefix,
               const std::vector<Cell>& cells) {
  bool first = true;
  for (const auto& p : prefix) {
    out << (first ? "" : ",") << p;
    first = false;
  }
  for (const auto& c : cells) {
    out << (first ? "" : ",") << format_cell(c);
    first = false;
  }
  out << "\r\n";
}

void write_header(std::ostream& out, const std::vector<std::string>& columns) {
  std::vector<Cell> cells(columns.begin(), columns.end());
  write_row(out, {"replicate", "seed"}, cells);
}

void check_columns(std::span<const RunLog> logs, const Table RunLog::*table) {
  for (const auto& log : logs)
    if ((log.*table).columns != (logs.front().*table).columns)
      throw std::runtime_error("replicates disagree on report columns");
}

}  // namespace

std::string format_cell(const Cell& cell) {
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  if (const auto* s = std::get_if<std::string>(&cell)) return quote_if_needed(*s);
  const double d = std::get<double>(cell);
  if (std::isnan(d)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, end);
}

void write_series_csv(std::span<const RunLog> logs, std::ostream& out) {
  if (logs.empty()) throw std::invalid_argument("no run logs to report");
  check_columns(logs, &RunLog::series);
  write_header(out, logs.front().series.columns);
  for (const auto& log : logs)
    for (const auto& row : log.series.rows)
      write_row(out, {std::to_string(log.replicate), std::to_string(log.seed)}, row);
}

void write_summary_csv(std::span<const RunLog> logs, std::ostream& out) {
  if (logs.empty()) throw std::invalid_argument("no run logs to report");
  check_columns(logs, &RunLog::summary);
  write_header(out, logs.front().summary.columns);
  for (const auto& log : logs)
    for (const auto& row : log.summary.rows)
      write_row(out, {std::to_string(log.replicate), std::to_string(log.seed)}, row);
}

void write_summary_text(std::span<const RunLog> logs, const ExperimentConfig& config,
                        std::ostream& out) {
  if (logs.empty()) throw std::invalid_argument("no run logs to report");
  out << "experiment: " << to_string(config.kind) << "\n";
  out << "replicates: " << logs.size() << "\n";
  out << "seeds: " << logs.front().seed << " .. " << logs.back().seed << "\n";
  out << "config: " << to_json(config).dump() << "\n\n";

  const auto& columns = logs.front().summary.columns;
  out << "summary column means over replicates:\n";
  for (std::size_t c = 0; c < columns.size(); ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& log : logs) {
      for (const auto& row : log.summary.rows) {
        if (const auto* d = std::get_if<double>(&row[c])) {
          if (std::isfinite(*d)) sum += *d, ++count;
        } else if (const auto* i = std::get_if<std::int64_t>(&row[c])) {
          sum += static_cast<double>(*i), ++count;
        }
      }
    }
    if (count == 0) continue;
    out << "  " << columns[c] << ": " << format_cell(sum / static_cast<double>(count)) << "\n";
  }

  std::map<std::string, std::size_t> outcomes;
  for (const auto& log : logs)
    if (log.outcome) ++outcomes[*log.outcome];
  if (!outcomes.empty()) {
    out << "\noutcome counts:\n";
    for (const auto& [name, n] : outcomes) out << "  " << name << ": " << n << "\n";
  }
}

ReportPaths write_reports(std::span<const RunLog> logs, const ExperimentConfig& config,
                          const std::filesystem::path& dir) {
  if (logs.empty()) throw std::invalid_argument("no run logs to report");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());

  const std::string stem(to_string(config.kind));
  ReportPaths paths{dir / (stem + "_series.csv"), dir / (stem + "_summary.csv"),
                    dir / (stem + "_summary.txt")};
  auto open = [](const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
  };
  auto finish = [](std::ofstream& f, const std::filesystem::path& p) {
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + p.string());
  };
  {
    auto f = open(paths.series);
    write_series_csv(logs, f);
    finish(f, paths.series);
  }
  {
    auto f = open(paths.summary);
    write_summary_csv(logs, f);
    finish(f, paths.summary);
  }
  {
    auto f = open(paths.text);
    write_summary_text(logs, config, f);
    finish(f, paths.text);
  }
  return paths;
}

}  // namespace coevo::engine

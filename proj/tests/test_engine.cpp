#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "coevo/engine/batch.hpp"
#include "coevo/engine/config.hpp"
#include "coevo/engine/report.hpp"

using namespace coevo;
using namespace coevo::engine;
using nlohmann::json;

namespace {

const std::filesystem::path kConfigDir = COEVO_CONFIG_DIR;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string config_error_key(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("coevo_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

ExperimentConfig small(ExperimentKind kind) {
  auto cfg = default_config(kind);
  cfg.replicates = 4;
  cfg.base_seed = 11;
  if (auto* p = std::get_if<NkcParams>(&cfg.params)) {
    p->species = {2, 3};
    p->k = {1, 3};
    p->c = {0, 2};
    p->runs = 2;
  } else if (auto* p = std::get_if<WbParams>(&cfg.params)) {
    p->periods = 120;
    p->market.shock.t1 = 60;
    p->market.population = 200;
  } else if (auto* p = std::get_if<MetaGaParams>(&cfg.params)) {
    p->n = 10;
    p->population = 20;
    p->generations = 15;
  } else if (auto* p = std::get_if<NkWalkParams>(&cfg.params)) {
    p->walks = 20;
  }
  return cfg;
}

}  // namespace

TEST_CASE("shipped config files equal the built-in defaults") {
  const auto doc = json::parse(slurp(kConfigDir / "defaults.json"));
  CHECK(doc == defaults_document());
  for (auto kind : kAllKinds) {
    const auto cfg = load_config(kConfigDir / (std::string(to_string(kind)) + ".json"));
    CHECK(cfg.kind == kind);
    CHECK(to_json(cfg) == to_json(default_config(kind)));
  }
}

TEST_CASE("kind names round-trip") {
  for (auto kind : kAllKinds) CHECK(parse_kind(to_string(kind)) == kind);
  CHECK_FALSE(parse_kind("nk-nope").has_value());
}

TEST_CASE("minimal wb-run config is valid and round-trips") {
  const auto cfg = parse_config(json{{"kind", "wb-run"}});
  CHECK(cfg.kind == ExperimentKind::wb_run);
  CHECK(to_json(parse_config(to_json(cfg))) == to_json(cfg));
}

TEST_CASE("config errors name the offending key") {
  SUBCASE("K = N") {
    const json doc = {{"kind", "nk-walk"}, {"params", {{"N", 6}, {"K", 6}}}};
    try {
      parse_config(doc);
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("K out of range") != std::string::npos);
    }
  }
  SUBCASE("h2 > h1") {
    const json doc = {{"kind", "wb-run"}, {"params", {{"shock", {{"h1", 2}, {"h2", 3}}}}}};
    CHECK(config_error_key(doc) == "params.shock.h2");
    try {
      parse_config(doc);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("h2 <= h1") != std::string::npos);
    }
  }
  SUBCASE("unknown key") {
    CHECK(config_error_key(json{{"kind", "nk-walk"}, {"params", {{"n", 6}}}}) == "params.n");
    CHECK(config_error_key(json{{"kind", "nk-walk"}, {"replicas", 2}}) == "replicas");
  }
  SUBCASE("wrong type") {
    CHECK_FALSE(config_error_key(json{{"kind", "nk-walk"}, {"replicates", "three"}}).empty());
  }
  SUBCASE("kind mismatch") {
    CHECK_THROWS_AS(parse_config(json{{"kind", "nk-walk"}}, ExperimentKind::wb_run), ConfigError);
  }
  SUBCASE("unreadable file") {
    CHECK_THROWS_AS(load_config("/nonexistent/coevo.json"), ConfigError);
  }
}

TEST_CASE("a single replicate equals a direct run") {
  auto cfg = small(ExperimentKind::wb_run);
  cfg.replicates = 1;
  const auto logs = run_batch(cfg);
  REQUIRE(logs.size() == 1);
  const auto& p = std::get<WbParams>(cfg.params);
  const auto hist = wb::run_market(p.market, p.periods, cfg.base_seed);
  REQUIRE(logs[0].series.rows.size() == hist.size());
  for (std::size_t t = 0; t < hist.size(); ++t)
    CHECK(std::get<double>(logs[0].series.rows[t][2]) == hist[t].aggregate_welfare);
  CHECK(*logs[0].outcome == wb::to_string(wb::classify_outcome(hist, p.market.shock.t1, p.outcome_rule())));
}

TEST_CASE("same_seed replicates are identical") {
  auto cfg = small(ExperimentKind::nk_walk);
  const auto logs = run_batch(cfg, {std::nullopt, true});
  std::ostringstream a, b;
  write_series_csv(std::span(logs).first(1), a);
  for (std::size_t i = 1; i < logs.size(); ++i) {
    std::ostringstream other;
    auto copy = logs[i];
    copy.replicate = 0;
    write_series_csv(std::span(&copy, 1), other);
    CHECK(other.str() == a.str());
  }
}

TEST_CASE("sequential and threaded batches write byte-identical files") {
  for (auto kind : kAllKinds) {
    CAPTURE(to_string(kind));
    const auto cfg = small(kind);
    const auto d1 = scratch_dir("seq"), d4 = scratch_dir("par");
    const auto p1 = write_reports(run_batch(cfg, {1, false}), cfg, d1);
    const auto p4 = write_reports(run_batch(cfg, {4, false}), cfg, d4);
    CHECK(slurp(p1.series) == slurp(p4.series));
    CHECK(slurp(p1.summary) == slurp(p4.summary));
    CHECK(slurp(p1.text) == slurp(p4.text));
    const auto again = write_reports(run_batch(cfg, {1, false}), cfg, d4);
    CHECK(slurp(p1.series) == slurp(again.series));
    std::filesystem::remove_all(d1);
    std::filesystem::remove_all(d4);
  }
}

TEST_CASE("report schemas and row counts") {
  SUBCASE("nk-walk") {
    const auto cfg = small(ExperimentKind::nk_walk);
    const auto logs = run_batch(cfg);
    std::ostringstream out;
    write_series_csv(logs, out);
    const auto text = out.str();
    CHECK(text.rfind("replicate,seed,walk,start_fitness,end_fitness,steps,tie_at_end\r\n", 0) == 0);
    const auto lines = std::count(text.begin(), text.end(), '\n');
    CHECK(lines == 1 + 4 * 20);
  }
  SUBCASE("nkc-coevolve") {
    const auto logs = run_batch(small(ExperimentKind::nkc_coevolve));
    CHECK(logs[0].series.rows.size() == 2 * 2 * 2 * 2);
    CHECK(logs[0].summary.columns ==
          std::vector<std::string>{"cells", "runs", "converged_fraction", "median_steps_to_nash"});
  }
  SUBCASE("wb-run") {
    const auto cfg = small(ExperimentKind::wb_run);
    const auto logs = run_batch(cfg);
    const auto& cols = logs[0].series.columns;
    CHECK(cols.size() == 5 + 3 * 5 + 5 * 6);
    CHECK(cols[5] == "group0_type");
    CHECK(cols.back() == "supplier5_sales");
    CHECK(logs[0].series.rows.size() == 120);
    for (const auto& log : logs) CHECK(log.outcome.has_value());
  }
  SUBCASE("metaga-run") {
    const auto logs = run_batch(small(ExperimentKind::metaga_run));
    CHECK(logs[0].series.rows.size() == 15);
    CHECK(std::holds_alternative<double>(logs[0].summary.rows[0][3]));
  }
  SUBCASE("nk-optima") {
    const auto logs = run_batch(small(ExperimentKind::nk_optima));
    CHECK(logs[0].summary.rows.size() == 1);
  }
}

TEST_CASE("cell formatting") {
  CHECK(format_cell(Cell{std::int64_t{-3}}) == "-3");
  CHECK(format_cell(Cell{0.1}) == "0.1");
  CHECK(std::stod(format_cell(Cell{1.0 / 3.0})) == 1.0 / 3.0);
  CHECK(format_cell(Cell{std::string("a,b")}) == "\"a,b\"");
  CHECK(format_cell(Cell{std::string("say \"hi\"")}) == "\"say \"\"hi\"\"\"");
  CHECK(format_cell(Cell{std::string("plain")}) == "plain");
}

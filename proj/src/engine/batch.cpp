#include "coevo/engine/batch.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace coevo::engine {

namespace {

std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const auto mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

void run_kind(const NkWalkParams& p, std::uint64_t seed, RunLog& log) {
  const auto land = NKLandscape::build(p.n, p.k, seed, p.scheme);
  Rng rng = Rng(seed).split(1);
  log.series.columns = {"walk", "start_fitness", "end_fitness", "steps", "tie_at_end"};
  double steps_sum = 0.0, end_sum = 0.0, end_max = 0.0;
  for (std::size_t w = 0; w < p.walks; ++w) {
    const auto start = random_genotype(p.n, rng);
    const auto walk = adaptive_walk(land, start, p.rule, rng);
    log.series.rows.push_back({as_int(w), walk.trajectory.front().fitness, walk.end().fitness,
                               as_int(walk.steps()), std::int64_t{walk.tie_at_end}});
    steps_sum += static_cast<double>(walk.steps());
    end_sum += walk.end().fitness;
    end_max = std::max(end_max, walk.end().fitness);
  }
  const double walks = static_cast<double>(p.walks);
  log.summary.columns = {"N", "K", "walks", "mean_steps", "mean_end_fitness", "max_end_fitness"};
  log.summary.rows.push_back({as_int(p.n), as_int(p.k), as_int(p.walks), steps_sum / walks,
                              end_sum / walks, end_max});
}

void run_kind(const NkOptimaParams& p, std::uint64_t seed, RunLog& log) {
  const auto land = NKLandscape::build(p.n, p.k, seed, p.scheme);
  const auto optima = enumerate_local_optima(land);
  double best = 0.0, mean = 0.0;
  for (const auto& g : optima.optima) {
    const double f = land.fitness(g);
    best = std::max(best, f);
    mean += f;
  }
  mean /= static_cast<double>(optima.optima.size());
  log.series.columns = {"N", "K", "optima_count", "ties", "mean_optimum_fitness",
                        "global_max_fitness"};
  log.series.rows.push_back({as_int(p.n), as_int(p.k), as_int(optima.optima.size()),
                             std::int64_t{optima.ties}, mean, best});
  log.summary = log.series;
}

void run_kind(const NkcParams& p, std::uint64_t seed, RunLog& log) {
  log.series.columns = {"S", "N", "K", "C", "run", "converged", "moves", "steps_to_nash"};
  std::size_t cell = 0, converged = 0, total = 0;
  std::vector<double> steps;
  for (auto s : p.species)
    for (auto k : p.k)
      for (auto c : p.c) {
        for (std::size_t run = 0; run < p.runs; ++run) {
          const std::uint64_t sys_seed = splitmix64(seed ^ splitmix64(cell * 1000003ULL + run));
          const auto sys = NKCSystem::build(s, p.n, k, c, sys_seed, p.topology, p.scheme);
          Rng rng = Rng(sys_seed).split(7);
          const auto res = coevolution_run(sys, p.order, p.max_steps, rng, p.rule);
          Cell steps_cell = std::string{};
          if (res.steps_to_nash) {
            steps_cell = as_int(*res.steps_to_nash);
            steps.push_back(static_cast<double>(*res.steps_to_nash));
            ++converged;
          }
          ++total;
          log.series.rows.push_back({as_int(s), as_int(p.n), as_int(k), as_int(c), as_int(run),
                                     std::int64_t{res.steps_to_nash.has_value()},
                                     as_int(res.moves), steps_cell});
        }
        ++cell;
      }
  log.summary.columns = {"cells", "runs", "converged_fraction", "median_steps_to_nash"};
  log.summary.rows.push_back({as_int(cell), as_int(total),
                              static_cast<double>(converged) / static_cast<double>(total),
                              median(steps)});
}

void run_kind(const WbParams& p, std::uint64_t seed, RunLog& log) {
  const auto history = wb::run_market(p.market, p.periods, seed);
  auto& cols = log.series.columns;
  cols = {"period", "shock", "aggregate_welfare", "new_tech_share", "total_sales"};
  for (std::size_t i = 0; i < p.market.groups; ++i) {
    const auto g = "group" + std::to_string(i) + "_";
    cols.insert(cols.end(), {g + "type", g + "share", g + "W"});
  }
  for (std::size_t j = 0; j < p.market.suppliers; ++j) {
    const auto s = "supplier" + std::to_string(j) + "_";
    cols.insert(cols.end(), {s + "type", s + "share", s + "price", s + "quantity", s + "sales"});
  }
  double pre_max = -INFINITY;
  for (const auto& rec : history) {
    std::vector<Cell> row = {as_int(rec.period), std::int64_t{rec.shock}, rec.aggregate_welfare,
                             rec.new_tech_share(), rec.total_sales};
    for (const auto& g : rec.groups) {
      row.emplace_back(std::string(wb::to_string(g.tech)));
      row.emplace_back(g.share_before);
      row.emplace_back(g.attained_utility);
    }
    for (const auto& s : rec.suppliers) {
      row.emplace_back(std::string(wb::to_string(s.tech)));
      row.emplace_back(s.market_share);
      row.emplace_back(s.price);
      row.emplace_back(s.quantity);
      row.emplace_back(s.sales);
    }
    log.series.rows.push_back(std::move(row));
    if (rec.period < p.market.shock.t1) pre_max = std::max(pre_max, rec.aggregate_welfare);
  }
  const auto outcome = wb::classify_outcome(history, p.market.shock.t1, p.outcome_rule());
  log.outcome = std::string(wb::to_string(outcome));
  const auto& last = history.back();
  log.summary.columns = {"outcome", "pre_shock_max_welfare", "terminal_welfare", "welfare_lift",
                         "terminal_new_tech_share"};
  log.summary.rows.push_back({*log.outcome, pre_max, last.aggregate_welfare,
                              std::int64_t{last.aggregate_welfare > pre_max},
                              last.new_tech_share()});
}

void run_kind(const MetaGaParams& p, std::uint64_t seed, RunLog& log) {
  const auto cfg = p.to_ga_config(seed);
  const auto land = NKLandscape::build(cfg.n, cfg.k, cfg.seed, cfg.scheme);
  const auto result = ga::run_meta_ga(cfg, land);
  log.series.columns = {"generation", "best_fitness", "mean_fitness", "mean_mu", "mean_chi",
                        "mean_iota"};
  double best_ever = 0.0;
  for (const auto& g : result.history) {
    log.series.rows.push_back({as_int(g.generation), g.best_fitness, g.mean_fitness,
                               g.mean_mutation, g.mean_crossover, g.mean_inversion});
    best_ever = std::max(best_ever, g.best_fitness);
  }
  Cell global = std::string{};
  if (p.n <= 20) {
    double best = 0.0;
    for (std::uint64_t i = 0; i < (std::uint64_t{1} << p.n); ++i)
      best = std::max(best, land.fitness_of_index(i));
    global = best;
  }
  const auto& last = result.history.back();
  log.summary.columns = {"N",       "K",       "best_fitness_ever", "global_max_fitness",
                         "final_mu", "final_chi", "final_iota"};
  log.summary.rows.push_back({as_int(p.n), as_int(p.k), best_ever, global, last.mean_mutation,
                              last.mean_crossover, last.mean_inversion});
}

}  // namespace

RunLog run_replicate(const ExperimentConfig& config, std::size_t replicate, std::uint64_t seed) {
  RunLog log;
  log.replicate = replicate;
  log.seed = seed;
  log.config = to_json(config);
  std::visit([&](const auto& p) { run_kind(p, seed, log); }, config.params);
  return log;
}

std::vector<RunLog> run_batch(const ExperimentConfig& config, const BatchOptions& options) {
  const std::size_t n = config.replicates;
  const std::size_t workers = std::clamp<std::size_t>(options.workers.value_or(config.workers), 1, n);

  std::vector<std::optional<RunLog>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const std::uint64_t seed = options.same_seed ? config.base_seed : config.base_seed + i;
      try {
        slots[i] = run_replicate(config, i, seed);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    std::string what = "replicate " + std::to_string(i) + " failed";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      what += ": " + std::string(e.what());
    } catch (...) {
    }
    throw BatchError(what, std::move(slots));
  }
  std::vector<RunLog> logs;
  logs.reserve(n);
  for (auto& s : slots) logs.push_back(std::move(*s));
  return logs;
}

}  // namespace coevo::engine

#include "coevo/engine/config.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <utility>

namespace coevo::engine {

using nlohmann::json;

namespace {

template <class E>
using NameTable = std::initializer_list<std::pair<std::string_view, E>>;

const NameTable<ExperimentKind> kKindNames = {{"nk-walk", ExperimentKind::nk_walk},
                                              {"nk-optima", ExperimentKind::nk_optima},
                                              {"nkc-coevolve", ExperimentKind::nkc_coevolve},
                                              {"wb-run", ExperimentKind::wb_run},
                                              {"metaga-run", ExperimentKind::metaga_run}};
const NameTable<NeighborScheme> kSchemeNames = {{"random", NeighborScheme::random},
                                                {"adjacent", NeighborScheme::adjacent}};
const NameTable<WalkRule> kRuleNames = {{"random_fitter", WalkRule::random_fitter},
                                        {"greedy", WalkRule::greedy}};
const NameTable<CouplingTopology> kTopologyNames = {{"ring", CouplingTopology::ring},
                                                    {"all_to_one", CouplingTopology::all_to_one}};
const NameTable<TurnOrder> kOrderNames = {{"round_robin", TurnOrder::round_robin},
                                          {"random", TurnOrder::random}};

template <class E>
std::string_view name_of(const NameTable<E>& table, E value) {
  for (const auto& [name, v] : table)
    if (v == value) return name;
  return "?";
}

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json* obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (obj_ && !obj_->is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key_path(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const json* find(std::string_view key) {
    if (!obj_) return nullptr;
    auto it = obj_->find(key);
    if (it == obj_->end()) return nullptr;
    seen_.insert(std::string(key));
    return &*it;
  }

  void size(std::string_view key, std::size_t& out) {
    if (const json* v = find(key)) out = as_size(*v, key_path(key));
  }

  void uint64(std::string_view key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
        throw ConfigError(key_path(key), "expected a nonnegative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void real(std::string_view key, double& out) {
    if (const json* v = find(key)) out = as_real(*v, key_path(key));
  }

  void boolean(std::string_view key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(key_path(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(std::string_view key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(key_path(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  template <class E>
  void choice(std::string_view key, E& out, const NameTable<E>& table) {
    const json* v = find(key);
    if (!v) return;
    if (v->is_string()) {
      const auto s = v->get<std::string>();
      for (const auto& [name, value] : table)
        if (name == s) {
          out = value;
          return;
        }
    }
    std::string allowed;
    for (const auto& [name, value] : table) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
    throw ConfigError(key_path(key), "expected one of: " + allowed);
  }

  /// Accepts a single integer or a nonempty array of integers.
  void size_list(std::string_view key, std::vector<std::size_t>& out) {
    const json* v = find(key);
    if (!v) return;
    const auto path = key_path(key);
    if (v->is_array()) {
      if (v->empty()) throw ConfigError(path, "expected a nonempty list");
      std::vector<std::size_t> values;
      for (const auto& e : *v) values.push_back(as_size(e, path));
      out = std::move(values);
    } else {
      out = {as_size(*v, path)};
    }
  }

  void real_vector(std::string_view key, Eigen::VectorXd& out) {
    const json* v = find(key);
    if (!v) return;
    const auto path = key_path(key);
    if (!v->is_array() || v->empty()) throw ConfigError(path, "expected a nonempty array of numbers");
    Eigen::VectorXd values(static_cast<Eigen::Index>(v->size()));
    for (std::size_t i = 0; i < v->size(); ++i)
      values[static_cast<Eigen::Index>(i)] = as_real((*v)[i], path);
    out = std::move(values);
  }

  void real_pair(std::string_view key, double& lo, double& hi) {
    const json* v = find(key);
    if (!v) return;
    const auto path = key_path(key);
    if (!v->is_array() || v->size() != 2) throw ConfigError(path, "expected [low, high]");
    lo = as_real((*v)[0], path);
    hi = as_real((*v)[1], path);
  }

  ObjectReader child(std::string_view key) { return ObjectReader(find(key), key_path(key)); }

  void finish() const {
    if (!obj_) return;
    for (const auto& [key, value] : obj_->items())
      if (!seen_.count(key)) throw ConfigError(key_path(key), "unknown key");
  }

 private:
  static std::size_t as_size(const json& v, const std::string& path) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      throw ConfigError(path, "expected a nonnegative integer");
    return v.get<std::size_t>();
  }
  static double as_real(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path, "expected a finite number");
    return d;
  }

  const json* obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

void check_k(std::size_t n, std::size_t k, const std::string& key) {
  require(k < n, key, "K out of range: need 0 <= K <= N-1 (N = " + std::to_string(n) + ")");
}

void read(ObjectReader& r, NkWalkParams& p) {
  r.size("N", p.n);
  r.size("K", p.k);
  r.choice("scheme", p.scheme, kSchemeNames);
  r.choice("rule", p.rule, kRuleNames);
  r.size("walks", p.walks);
  require(p.n >= 1 && p.n <= 64, r.key_path("N"), "N out of range: need 1 <= N <= 64");
  check_k(p.n, p.k, r.key_path("K"));
  require(p.walks >= 1, r.key_path("walks"), "walks must be at least 1");
}

void read(ObjectReader& r, NkOptimaParams& p) {
  r.size("N", p.n);
  r.size("K", p.k);
  r.choice("scheme", p.scheme, kSchemeNames);
  require(p.n >= 1 && p.n <= kMaxEnumerableLoci, r.key_path("N"),
          "N out of range: exhaustive enumeration needs 1 <= N <= 24");
  check_k(p.n, p.k, r.key_path("K"));
}

void read(ObjectReader& r, NkcParams& p) {
  r.size("N", p.n);
  r.size_list("S", p.species);
  r.size_list("K", p.k);
  r.size_list("C", p.c);
  r.choice("topology", p.topology, kTopologyNames);
  r.choice("order", p.order, kOrderNames);
  r.choice("rule", p.rule, kRuleNames);
  r.choice("scheme", p.scheme, kSchemeNames);
  r.size("max_steps", p.max_steps);
  r.size("runs", p.runs);
  require(p.n >= 1 && p.n <= 64, r.key_path("N"), "N out of range: need 1 <= N <= 64");
  for (auto s : p.species) require(s >= 2, r.key_path("S"), "S out of range: need S >= 2");
  for (auto k : p.k) check_k(p.n, k, r.key_path("K"));
  for (auto c : p.c) require(c <= p.n, r.key_path("C"), "C out of range: need 0 <= C <= N");
  for (auto k : p.k)
    for (auto c : p.c)
      require(k + c + 1 <= 24, r.key_path("C"), "K + C + 1 must not exceed 24 (table size)");
  require(p.max_steps >= 1, r.key_path("max_steps"), "max_steps must be positive");
  require(p.runs >= 1, r.key_path("runs"), "runs must be at least 1");
}

void read(ObjectReader& r, WbParams& p) {
  auto& m = p.market;
  r.size("periods", p.periods);
  r.size("groups", m.groups);
  r.size("suppliers", m.suppliers);
  r.size("population", m.population);
  r.real("budget", m.budget);
  r.real("replicator_strength", m.replicator_strength);
  r.real("mutation_prob", m.mutation_prob);
  r.real("mutation_scale", m.mutation_scale);
  r.real("output_adjustment", m.output_adjustment);
  r.real("markup", m.markup);
  r.real_vector("gamma", m.gamma);
  r.real("initial_quantity", m.initial_quantity);
  r.real("entrant_share", m.entrant_share);
  r.real_pair("alpha_range", m.alpha_min, m.alpha_max);
  r.real_pair("beta_range", m.beta_min, m.beta_max);
  r.real("roulette_floor", m.roulette_floor);

  auto sr = r.child("shock");
  auto& s = m.shock;
  sr.size("t1", s.t1);
  sr.size("h1", s.h1);
  sr.size("h2", s.h2);
  sr.size("h", s.h);
  sr.real("x_max", s.x_max);
  sr.real("theta", s.theta);
  sr.real("cutoff_supplier", s.cutoff_supplier);
  sr.real("cutoff_user", s.cutoff_user);
  sr.finish();

  auto orr = r.child("outcome");
  orr.real("substitution_threshold", p.substitution_threshold);
  orr.real("lockout_threshold", p.lockout_threshold);
  orr.size("window", p.window);
  orr.finish();

  require(1 <= s.h2 && s.h2 <= s.h1 && s.h1 < s.h, sr.key_path("h2"),
          "shock dimensions violate 1 <= h2 <= h1 < h");
  require(m.suppliers >= 1, r.key_path("suppliers"), "suppliers must be at least 1");
  require(p.periods > s.t1, r.key_path("periods"), "periods must extend beyond shock.t1");
  require(p.window >= 1 && p.window <= p.periods - s.t1, orr.key_path("window"),
          "window must lie in 1..(periods - t1)");
  require(p.lockout_threshold >= 0 && p.lockout_threshold < p.substitution_threshold &&
              p.substitution_threshold <= 1,
          orr.key_path("lockout_threshold"),
          "need 0 <= lockout_threshold < substitution_threshold <= 1");
  require(static_cast<std::size_t>(m.gamma.size()) == s.h, r.key_path("gamma"),
          "gamma must have exactly h entries");
  try {
    m.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(r.key_path("market"), e.what());
  }
}

void read(ObjectReader& r, MetaGaParams& p) {
  r.size("N", p.n);
  r.size("K", p.k);
  r.size("population", p.population);
  r.size("generations", p.generations);
  r.real("rate_min", p.bounds.min);
  r.real("rate_max", p.bounds.max);
  r.choice("scheme", p.scheme, kSchemeNames);
  r.boolean("elitism", p.elitism);
  r.real("selection_floor", p.selection_floor);
  require(p.n >= 1 && p.n <= 64, r.key_path("N"), "N out of range: need 1 <= N <= 64");
  check_k(p.n, p.k, r.key_path("K"));
  require(p.population >= 2 && p.population % 2 == 0, r.key_path("population"),
          "population must be even and at least 2");
  require(p.generations >= 1, r.key_path("generations"), "generations must be at least 1");
  require(p.bounds.min > 0 && p.bounds.min <= p.bounds.max && p.bounds.max <= 1,
          r.key_path("rate_min"), "need 0 < rate_min <= rate_max <= 1");
  require(p.selection_floor > 0, r.key_path("selection_floor"), "selection_floor must be positive");
}

json params_json(const NkWalkParams& p) {
  return {{"N", p.n},
          {"K", p.k},
          {"scheme", name_of(kSchemeNames, p.scheme)},
          {"rule", name_of(kRuleNames, p.rule)},
          {"walks", p.walks}};
}

json params_json(const NkOptimaParams& p) {
  return {{"N", p.n}, {"K", p.k}, {"scheme", name_of(kSchemeNames, p.scheme)}};
}

json params_json(const NkcParams& p) {
  return {{"N", p.n},
          {"S", p.species},
          {"K", p.k},
          {"C", p.c},
          {"topology", name_of(kTopologyNames, p.topology)},
          {"order", name_of(kOrderNames, p.order)},
          {"rule", name_of(kRuleNames, p.rule)},
          {"scheme", name_of(kSchemeNames, p.scheme)},
          {"max_steps", p.max_steps},
          {"runs", p.runs}};
}

json params_json(const WbParams& p) {
  const auto& m = p.market;
  const auto& s = m.shock;
  std::vector<double> gamma(m.gamma.data(), m.gamma.data() + m.gamma.size());
  return {{"periods", p.periods},
          {"groups", m.groups},
          {"suppliers", m.suppliers},
          {"population", m.population},
          {"budget", m.budget},
          {"replicator_strength", m.replicator_strength},
          {"mutation_prob", m.mutation_prob},
          {"mutation_scale", m.mutation_scale},
          {"output_adjustment", m.output_adjustment},
          {"markup", m.markup},
          {"gamma", gamma},
          {"initial_quantity", m.initial_quantity},
          {"entrant_share", m.entrant_share},
          {"alpha_range", {m.alpha_min, m.alpha_max}},
          {"beta_range", {m.beta_min, m.beta_max}},
          {"roulette_floor", m.roulette_floor},
          {"shock",
           {{"t1", s.t1},
            {"h1", s.h1},
            {"h2", s.h2},
            {"h", s.h},
            {"x_max", s.x_max},
            {"theta", s.theta},
            {"cutoff_supplier", s.cutoff_supplier},
            {"cutoff_user", s.cutoff_user}}},
          {"outcome",
           {{"substitution_threshold", p.substitution_threshold},
            {"lockout_threshold", p.lockout_threshold},
            {"window", p.window}}}};
}

json params_json(const MetaGaParams& p) {
  return {{"N", p.n},
          {"K", p.k},
          {"population", p.population},
          {"generations", p.generations},
          {"rate_min", p.bounds.min},
          {"rate_max", p.bounds.max},
          {"scheme", name_of(kSchemeNames, p.scheme)},
          {"elitism", p.elitism},
          {"selection_floor", p.selection_floor}};
}

}  // namespace

std::string_view to_string(ExperimentKind kind) { return name_of(kKindNames, kind); }

std::optional<ExperimentKind> parse_kind(std::string_view name) {
  for (const auto& [n, k] : kKindNames)
    if (n == name) return k;
  return std::nullopt;
}

wb::OutcomeRule WbParams::outcome_rule() const {
  return {substitution_threshold, lockout_threshold, periods - market.shock.t1, window};
}

ga::MetaGaConfig MetaGaParams::to_ga_config(std::uint64_t seed) const {
  ga::MetaGaConfig c;
  c.n = n;
  c.k = k;
  c.population = population;
  c.generations = generations;
  c.seed = seed;
  c.bounds = bounds;
  c.scheme = scheme;
  c.elitism = elitism;
  c.selection_floor = selection_floor;
  return c;
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::nk_walk: c.params = NkWalkParams{}; break;
    case ExperimentKind::nk_optima: c.params = NkOptimaParams{}; break;
    case ExperimentKind::nkc_coevolve: c.params = NkcParams{}; break;
    case ExperimentKind::wb_run: c.params = WbParams{}; break;
    case ExperimentKind::metaga_run: c.params = MetaGaParams{}; break;
  }
  return c;
}

ExperimentConfig parse_config(const json& doc, std::optional<ExperimentKind> expected) {
  ObjectReader root(&doc, "");
  std::string kind_name;
  root.string("kind", kind_name);
  std::optional<ExperimentKind> kind;
  if (!kind_name.empty()) {
    kind = parse_kind(kind_name);
    if (!kind) throw ConfigError("kind", "unknown experiment kind '" + kind_name + "'");
    if (expected && *expected != *kind)
      throw ConfigError("kind", "config is for '" + kind_name + "' but '" +
                                    std::string(to_string(*expected)) + "' was requested");
  } else {
    if (!expected) throw ConfigError("kind", "missing experiment kind");
    kind = expected;
  }

  ExperimentConfig cfg = default_config(*kind);
  root.size("replicates", cfg.replicates);
  root.uint64("base_seed", cfg.base_seed);
  root.string("output", cfg.output);
  root.size("workers", cfg.workers);
  require(cfg.replicates >= 1, "replicates", "replicates must be at least 1");
  require(cfg.workers >= 1, "workers", "workers must be at least 1");

  auto pr = root.child("params");
  std::visit([&](auto& p) { read(pr, p); }, cfg.params);
  pr.finish();
  root.finish();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<ExperimentKind> expected) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc, expected);
}

json to_json(const ExperimentConfig& config) {
  json doc = {{"kind", to_string(config.kind)},
              {"replicates", config.replicates},
              {"base_seed", config.base_seed},
              {"output", config.output},
              {"workers", config.workers}};
  doc["params"] = std::visit([](const auto& p) { return params_json(p); }, config.params);
  return doc;
}

json defaults_document() {
  json doc = json::object();
  for (auto kind : kAllKinds) doc[std::string(to_string(kind))] = to_json(default_config(kind));
  return doc;
}

}  // namespace coevo::engine

#include "coevo/wb_market.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace coevo::wb {

std::string_view to_string(TechType t) { return t == TechType::old_tech ? "old" : "new"; }

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::substitution_a: return "substitution_A";
    case Outcome::substitution_b: return "substitution_B";
    case Outcome::lock_out: return "lock_out";
    case Outcome::sharing: return "sharing";
  }
  return "unknown";
}

void ShockConfig::validate() const {
  if (!(1 <= h2 && h2 <= h1 && h1 < h))
    throw ParameterError("shock dimensions violate 1 <= h2 <= h1 < h");
  if (!(x_max > 0.0)) throw ParameterError("shock.x_max must be positive");
  if (!(theta > 0.0 && theta <= 1.0)) throw ParameterError("shock.theta must lie in (0,1]");
  if (!(cutoff_supplier >= 0.0 && cutoff_supplier < 1.0))
    throw ParameterError("shock.cutoff_supplier must lie in [0,1)");
  if (!(cutoff_user >= 0.0 && cutoff_user < 1.0))
    throw ParameterError("shock.cutoff_user must lie in [0,1)");
}

void MarketParams::validate() const {
  shock.validate();
  if (groups == 0) throw ParameterError("groups must be positive");
  if (population == 0) throw ParameterError("population must be positive");
  if (!(budget > 0.0)) throw ParameterError("budget must be positive");
  if (!(replicator_strength >= 0.0)) throw ParameterError("replicator_strength must be >= 0");
  if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0))
    throw ParameterError("mutation_prob must lie in [0,1]");
  if (!(mutation_scale > 0.0)) throw ParameterError("mutation_scale must be positive");
  if (!(output_adjustment >= 0.0 && output_adjustment <= 1.0))
    throw ParameterError("output_adjustment must lie in [0,1]");
  if (!(markup >= 0.0)) throw ParameterError("markup must be >= 0");
  if (static_cast<std::size_t>(gamma.size()) != shock.h)
    throw ParameterError("gamma must have one entry per characteristic (h)");
  if ((gamma.array() < 0.0).any()) throw ParameterError("gamma entries must be >= 0");
  if (!(initial_quantity >= 0.0)) throw ParameterError("initial_quantity must be >= 0");
  if (!(entrant_share > 0.0 && entrant_share < 1.0))
    throw ParameterError("entrant_share must lie in (0,1)");
  if (!(alpha_min >= 0.0 && alpha_min <= alpha_max))
    throw ParameterError("alpha range must satisfy 0 <= alpha_min <= alpha_max");
  if (!(beta_min > 0.0 && beta_min <= beta_max))
    throw ParameterError("beta range must satisfy 0 < beta_min <= beta_max");
  if (!(roulette_floor > 0.0)) throw ParameterError("roulette_floor must be positive");
}

bool DesignSpace::contains(const Design& x, double tol) const {
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const auto uk = static_cast<std::size_t>(k);
    if (x[k] < 0.0) return false;
    if ((uk < begin || uk >= end) && x[k] != 0.0) return false;
    if (x[k] > cap + tol) return false;
  }
  return true;
}

DesignSpace old_design_space(const ShockConfig& shock, bool shock_applied) {
  return {0, shock.h1,
          shock_applied ? std::numeric_limits<double>::infinity() : shock.x_max};
}

DesignSpace new_design_space(const ShockConfig& shock) {
  return {shock.h2 - 1, shock.h, std::numeric_limits<double>::infinity()};
}

std::vector<RankedOffer> rank_offers(const UserGroup& group, std::span<const OfferView> offers,
                                     double budget) {
  std::vector<RankedOffer> ranked;
  std::vector<RankedOffer> unaffordable;
  ranked.reserve(offers.size() + 1);
  ranked.push_back({std::nullopt, null_utility(group, budget), 0.0, true});
  for (const auto& o : offers) {
    if (auto u = utility(group, *o.design, o.price, budget))
      ranked.push_back({o.supplier, *u, o.price, true});
    else
      unaffordable.push_back({o.supplier, -std::numeric_limits<double>::infinity(), o.price, false});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedOffer& a, const RankedOffer& b) {
    if (a.utility != b.utility) return a.utility > b.utility;
    if (a.supplier.has_value() != b.supplier.has_value()) return !a.supplier.has_value();
    if (a.price != b.price) return a.price < b.price;
    return a.supplier < b.supplier;
  });
  std::sort(unaffordable.begin(), unaffordable.end(),
            [](const RankedOffer& a, const RankedOffer& b) { return a.supplier < b.supplier; });
  ranked.insert(ranked.end(), unaffordable.begin(), unaffordable.end());
  return ranked;
}

std::vector<std::size_t> group_sizes(const Eigen::VectorXd& shares, std::size_t population) {
  const auto m = static_cast<std::size_t>(shares.size());
  std::vector<std::size_t> sizes(m, 0);
  std::vector<double> remainder(m, 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double exact = shares[static_cast<Eigen::Index>(i)] * static_cast<double>(population);
    sizes[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t r = 0; assigned < population && r < m; ++r, ++assigned) ++sizes[idx[r]];
  return sizes;
}

SessionResult market_session(std::span<const UserGroup> groups, std::span<const Supplier> suppliers,
                             std::span<const std::size_t> sizes, double budget, Rng& rng) {
  const std::size_t m = groups.size();
  const std::size_t ns = suppliers.size();
  if (sizes.size() != m) throw ParameterError("one size per group required");

  SessionResult res;
  res.order.resize(m);
  std::iota(res.order.begin(), res.order.end(), std::size_t{0});
  rng.shuffle(res.order.begin(), res.order.end());
  res.sizes.assign(sizes.begin(), sizes.end());
  res.purchases.assign(m, 0);
  res.attained.assign(m, 0.0);
  res.min_user_utility.assign(m, 0.0);
  res.sales.assign(ns, 0.0);
  res.demand.assign(ns, 0.0);
  res.sales_by_group = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ns),
                                             static_cast<Eigen::Index>(m));

  std::vector<OfferView> offers;
  offers.reserve(ns);
  for (std::size_t j = 0; j < ns; ++j)
    offers.push_back({j, &suppliers[j].design, suppliers[j].price});

  // Whole units still on offer; carried across groups within the period.
  std::vector<double> stock(ns);
  for (std::size_t j = 0; j < ns; ++j) stock[j] = std::floor(suppliers[j].quantity);

  for (auto gi : res.order) {
    const auto& group = groups[gi];
    const double null_u = null_utility(group, budget);
    const auto ranking = rank_offers(group, offers, budget);
    const std::size_t size = sizes[gi];

    if (size == 0) {
      double u = null_u;
      for (const auto& r : ranking) {
        if (!r.supplier || !r.affordable) break;
        if (stock[*r.supplier] >= 1.0) {
          u = r.utility;
          break;
        }
      }
      res.attained[gi] = u;
      res.min_user_utility[gi] = u;
      continue;
    }

    std::size_t waiting = size;
    double total_utility = 0.0;
    double min_u = std::numeric_limits<double>::infinity();
    for (const auto& r : ranking) {
      if (!r.supplier || !r.affordable) break;
      const std::size_t j = *r.supplier;
      res.demand[j] += static_cast<double>(waiting);
      const auto bought = static_cast<std::size_t>(
          std::min<double>(static_cast<double>(waiting), stock[j]));
      if (bought == 0) continue;
      stock[j] -= static_cast<double>(bought);
      res.sales[j] += static_cast<double>(bought);
      res.sales_by_group(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(gi)) +=
          static_cast<double>(bought);
      res.purchases[gi] += bought;
      total_utility += static_cast<double>(bought) * r.utility;
      min_u = std::min(min_u, r.utility);
      waiting -= bought;
      if (waiting == 0) break;
    }
    if (waiting > 0) {
      total_utility += static_cast<double>(waiting) * null_u;
      min_u = std::min(min_u, null_u);
    }
    res.attained[gi] = total_utility / static_cast<double>(size);
    res.min_user_utility[gi] = min_u;
  }
  return res;
}

void supplier_period_update(Supplier& supplier, double sales, double demand,
                            const MarketParams& params) {
  const double cost = unit_cost(supplier.design, supplier.gamma);
  supplier.profit = supplier.price * sales - cost * supplier.quantity;
  supplier.wealth += supplier.profit;
  supplier.quantity = std::max(
      0.0, supplier.quantity + params.output_adjustment * (demand - supplier.quantity));
}

namespace {

bool strictly_better(const std::optional<double>& candidate, const std::optional<double>& current) {
  if (!candidate) return false;
  return !current || *candidate > *current;
}

std::optional<double> offer_value(const UserGroup& target, const Design& x,
                                  const Eigen::VectorXd& gamma, const MarketParams& params) {
  return utility(target, x, list_price(x, gamma, params.markup), params.budget);
}

bool accept_if_better(Supplier& supplier, Design candidate, const UserGroup& target,
                      const MarketParams& params) {
  const auto current = utility(target, supplier.design, supplier.price, params.budget);
  const auto proposed = offer_value(target, candidate, supplier.gamma, params);
  if (!strictly_better(proposed, current)) return false;
  supplier.design = std::move(candidate);
  supplier.price = list_price(supplier.design, supplier.gamma, params.markup);
  return true;
}

}  // namespace

bool mutate_design(Supplier& supplier, const UserGroup& target, double mu, double kappa,
                   const DesignSpace& space, const MarketParams& params, Rng& rng) {
  Design candidate = supplier.design;
  bool touched = false;
  for (std::size_t k = space.begin; k < space.end; ++k) {
    if (!rng.bernoulli(mu)) continue;
    const auto i = static_cast<Eigen::Index>(k);
    candidate[i] = std::clamp(candidate[i] + kappa * rng.normal(), 0.0, space.cap);
    touched = true;
  }
  if (!touched) return false;
  return accept_if_better(supplier, std::move(candidate), target, params);
}

std::size_t select_rival(std::span<const Supplier> suppliers, std::size_t self, double floor,
                         Rng& rng) {
  if (suppliers.size() < 2) throw StateError("rival selection needs at least one other supplier");
  double total = 0.0;
  for (std::size_t j = 0; j < suppliers.size(); ++j)
    if (j != self) total += std::max(suppliers[j].profit, floor);
  double spin = rng.uniform() * total;
  std::size_t last = 0;
  for (std::size_t j = 0; j < suppliers.size(); ++j) {
    if (j == self) continue;
    last = j;
    spin -= std::max(suppliers[j].profit, floor);
    if (spin < 0.0) return j;
  }
  return last;
}

bool selective_transfer(Supplier& supplier, const Supplier& rival, const UserGroup& target,
                        const DesignSpace& space, const MarketParams& params, Rng& rng) {
  const std::size_t dims = space.end - space.begin;
  if (dims == 0) return false;
  // Uniform over the 2^dims - 1 nonempty subsets.
  std::uint64_t mask = 0;
  while (mask == 0) mask = rng.below(std::uint64_t{1} << dims);
  Design candidate = supplier.design;
  for (std::size_t b = 0; b < dims; ++b) {
    if (((mask >> b) & 1U) == 0) continue;
    const auto i = static_cast<Eigen::Index>(space.begin + b);
    candidate[i] = std::min(rival.design[i], space.cap);
  }
  return accept_if_better(supplier, std::move(candidate), target, params);
}

Market::Market(MarketParams params, Rng& rng) : params_(std::move(params)) {
  params_.validate();
  const auto h = static_cast<Eigen::Index>(params_.shock.h);
  const auto old_space = old_design_space(params_.shock, false);

  groups_.resize(params_.groups);
  for (auto& g : groups_) {
    g.alpha = Eigen::VectorXd::Zero(h);
    for (std::size_t k = old_space.begin; k < old_space.end; ++k)
      g.alpha[static_cast<Eigen::Index>(k)] = rng.uniform(params_.alpha_min, params_.alpha_max);
    g.beta = rng.uniform(params_.beta_min, params_.beta_max);
    g.share = 1.0 / static_cast<double>(params_.groups);
    g.tech = TechType::old_tech;
  }

  suppliers_.resize(params_.suppliers);
  for (std::size_t j = 0; j < suppliers_.size(); ++j) {
    auto& s = suppliers_[j];
    s.id = j;
    s.tech = TechType::old_tech;
    s.design = Design::Zero(h);
    for (std::size_t k = old_space.begin; k < old_space.end; ++k)
      s.design[static_cast<Eigen::Index>(k)] = rng.uniform(0.0, params_.shock.x_max);
    s.gamma = params_.gamma;
    s.price = list_price(s.design, s.gamma, params_.markup);
    s.quantity = params_.initial_quantity;
    s.target_group = choose_target(s);
  }
}

Market::Market(MarketParams params, std::vector<UserGroup> groups, std::vector<Supplier> suppliers)
    : params_(std::move(params)), groups_(std::move(groups)), suppliers_(std::move(suppliers)) {
  params_.validate();
  if (groups_.size() != params_.groups)
    throw ParameterError("number of groups does not match params.groups");
  for (std::size_t j = 0; j < suppliers_.size(); ++j) {
    suppliers_[j].id = j;
    if (suppliers_[j].target_group >= groups_.size())
      throw ParameterError("supplier target group out of range");
  }
}

DesignSpace Market::design_space(const Supplier& s) const {
  return s.tech == TechType::old_tech ? old_design_space(params_.shock, shock_applied_)
                                      : new_design_space(params_.shock);
}

std::size_t Market::choose_target(const Supplier& s) const {
  std::size_t best = 0;
  double best_u = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    const auto u = utility(groups_[i], s.design, s.price, params_.budget);
    if (u && *u > best_u) {
      best_u = *u;
      best = i;
    }
  }
  return best;
}

void Market::apply_shock(Rng& rng) {
  if (shock_applied_) throw StateError("technology shock already applied");
  const auto& shock = params_.shock;
  const auto h = static_cast<Eigen::Index>(shock.h);
  const auto new_space = new_design_space(shock);

  std::vector<bool> replaced_group(groups_.size(), false);
  std::vector<std::size_t> new_groups;
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    if (groups_[i].share < shock.cutoff_user) {
      auto& g = groups_[i];
      g.alpha = Eigen::VectorXd::Zero(h);
      for (std::size_t k = new_space.begin; k < new_space.end; ++k)
        g.alpha[static_cast<Eigen::Index>(k)] = rng.uniform(params_.alpha_min, params_.alpha_max);
      g.beta = rng.uniform(params_.beta_min, params_.beta_max);
      g.share = std::max(g.share, params_.entrant_share);
      g.tech = TechType::new_tech;
      replaced_group[i] = true;
      new_groups.push_back(i);
    }
  }
  double total = 0.0;
  for (const auto& g : groups_) total += g.share;
  for (auto& g : groups_) g.share /= total;

  shock_applied_ = true;

  for (auto& s : suppliers_) {
    if (s.market_share < shock.cutoff_supplier) {
      s.tech = TechType::new_tech;
      s.design = Design::Zero(h);
      for (std::size_t k = new_space.begin; k < new_space.end; ++k)
        s.design[static_cast<Eigen::Index>(k)] = rng.uniform(0.0, shock.x_max);
      s.gamma = params_.gamma * shock.theta;
      s.price = list_price(s.design, s.gamma, params_.markup);
      s.quantity = params_.initial_quantity;
      s.wealth = 0.0;
      s.profit = 0.0;
      s.market_share = 0.0;
      s.target_group =
          new_groups.empty() ? choose_target(s) : new_groups[rng.below(new_groups.size())];
    } else if (replaced_group[s.target_group]) {
      s.target_group = choose_target(s);
    }
  }
}

PeriodRecord Market::step_period(Rng& rng) {
  PeriodRecord rec;
  rec.period = period_;
  if (period_ == params_.shock.t1 && !shock_applied_) {
    apply_shock(rng);
    rec.shock = true;
  }

  const std::size_t m = groups_.size();
  Eigen::VectorXd shares(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) shares[static_cast<Eigen::Index>(i)] = groups_[i].share;
  const auto sizes = group_sizes(shares, params_.population);
  const auto session = market_session(groups_, suppliers_, sizes, params_.budget, rng);

  Eigen::VectorXd attained = Eigen::Map<const Eigen::VectorXd>(
      session.attained.data(), static_cast<Eigen::Index>(m));
  const Eigen::VectorXd next = replicator_update(shares, attained, params_.replicator_strength);

  rec.groups.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    auto& gr = rec.groups[i];
    gr.tech = groups_[i].tech;
    gr.size = session.sizes[i];
    gr.purchases = session.purchases[i];
    gr.attained_utility = session.attained[i];
    gr.null_utility = null_utility(groups_[i], params_.budget);
    gr.min_user_utility = session.min_user_utility[i];
    gr.share_before = groups_[i].share;
    gr.share_after = next[static_cast<Eigen::Index>(i)];
    rec.aggregate_welfare += gr.share_before * gr.attained_utility;
  }
  for (std::size_t i = 0; i < m; ++i) groups_[i].share = next[static_cast<Eigen::Index>(i)];

  rec.total_sales = std::accumulate(session.sales.begin(), session.sales.end(), 0.0);
  rec.suppliers.resize(suppliers_.size());
  for (std::size_t j = 0; j < suppliers_.size(); ++j) {
    auto& s = suppliers_[j];
    auto& sr = rec.suppliers[j];
    sr.tech = s.tech;
    sr.quantity = s.quantity;
    sr.sales = session.sales[j];
    sr.demand = session.demand[j];
    s.market_share = rec.total_sales > 0 ? session.sales[j] / rec.total_sales : 0.0;
    supplier_period_update(s, session.sales[j], session.demand[j], params_);
    sr.market_share = s.market_share;
    sr.profit = s.profit;
    sr.wealth = s.wealth;
    if (s.tech == TechType::new_tech) {
      rec.new_tech_sales += session.sales[j];
      for (std::size_t i = 0; i < m; ++i)
        if (groups_[i].tech == TechType::new_tech)
          rec.new_tech_sales_to_new_groups +=
              session.sales_by_group(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
    }
  }

  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < suppliers_.size(); ++j) {
    auto& s = suppliers_[j];
    const auto& target = groups_[s.target_group];
    const auto space = design_space(s);
    rec.suppliers[j].utility_before_innovation =
        utility(target, s.design, s.price, params_.budget).value_or(neg_inf);
    mutate_design(s, target, params_.mutation_prob, params_.mutation_scale, space, params_, rng);
    if (suppliers_.size() > 1) {
      const auto rival = select_rival(suppliers_, j, params_.roulette_floor, rng);
      selective_transfer(s, suppliers_[rival], target, space, params_, rng);
    }
    auto& sr = rec.suppliers[j];
    sr.utility_after_innovation = utility(target, s.design, s.price, params_.budget).value_or(neg_inf);
    sr.target_group = s.target_group;
    sr.price = s.price;
    sr.design = s.design;
  }

  ++period_;
  return rec;
}

std::vector<PeriodRecord> run_market(const MarketParams& params, std::size_t periods,
                                     std::uint64_t seed) {
  Rng rng(seed);
  Market market(params, rng);
  std::vector<PeriodRecord> history;
  history.reserve(periods);
  for (std::size_t t = 0; t < periods; ++t) history.push_back(market.step_period(rng));
  return history;
}

Outcome classify_outcome(std::span<const PeriodRecord> history, std::size_t t1,
                         const OutcomeRule& rule) {
  if (rule.window == 0) throw ParameterError("outcome window must be positive");
  if (history.size() < t1 + rule.horizon || history.size() < rule.window)
    throw ParameterError("history too short for the outcome horizon");
  double total = 0.0, fresh = 0.0, fresh_to_new = 0.0;
  for (const auto& rec : history.last(rule.window)) {
    total += rec.total_sales;
    fresh += rec.new_tech_sales;
    fresh_to_new += rec.new_tech_sales_to_new_groups;
  }
  const double share = total > 0 ? fresh / total : 0.0;
  if (share > rule.substitution_threshold)
    return fresh_to_new > 0.5 * fresh ? Outcome::substitution_a : Outcome::substitution_b;
  if (share < rule.lockout_threshold) return Outcome::lock_out;
  return Outcome::sharing;
}

}  // namespace coevo::wb

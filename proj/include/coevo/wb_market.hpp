#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "coevo/errors.hpp"
#include "coevo/rng.hpp"

namespace coevo::wb {

/// Characteristic vector of a technology design (all components >= 0).
using Design = Eigen::VectorXd;

enum class TechType { old_tech, new_tech };

std::string_view to_string(TechType t);

struct UserGroup {
  Eigen::VectorXd alpha;  // weight per characteristic
  double beta = 1.0;      // weight on residual budget
  double share = 0.0;     // fraction of the user population
  TechType tech = TechType::old_tech;
};

struct Supplier {
  std::size_t id = 0;
  Design design;
  double price = 0.0;
  double quantity = 0.0;  // units offered this period
  double wealth = 0.0;
  double profit = 0.0;    // last period
  double market_share = 0.0;  // last period, by units sold
  std::size_t target_group = 0;
  TechType tech = TechType::old_tech;
  Eigen::VectorXd gamma;  // unit cost per characteristic, already scaled for new tech
};

/// Technology shock. Dimensions are 1-based as in h1, h2, h:
/// old technology lives on 1..h1, new technology on h2..h.
struct ShockConfig {
  std::size_t t1 = 100;
  std::size_t h1 = 3;
  std::size_t h2 = 2;
  std::size_t h = 4;
  double x_max = 10.0;
  double theta = 0.5;
  double cutoff_supplier = 0.05;
  double cutoff_user = 0.05;

  /// Throws ParameterError unless 1 <= h2 <= h1 < h and the reals are in range.
  void validate() const;
};

struct MarketParams {
  std::size_t groups = 5;
  std::size_t suppliers = 6;
  std::size_t population = 1000;   // G
  double budget = 10.0;            // m
  double replicator_strength = 2;  // r
  double mutation_prob = 0.3;      // mu
  double mutation_scale = 0.3;     // kappa
  double output_adjustment = 0.5;  // lambda
  double markup = 0.2;
  Eigen::VectorXd gamma = Eigen::VectorXd::Constant(4, 0.2);
  double initial_quantity = 200.0;
  double entrant_share = 0.05;
  double alpha_min = 0.2, alpha_max = 1.0;
  double beta_min = 0.5, beta_max = 1.5;
  double roulette_floor = 1e-9;
  ShockConfig shock;

  void validate() const;
};

/// Half-open 0-based range of characteristics a design may use, with its cap.
struct DesignSpace {
  std::size_t begin = 0;
  std::size_t end = 0;
  double cap = std::numeric_limits<double>::infinity();

  bool contains(const Design& x, double tol = 0.0) const;
};

DesignSpace old_design_space(const ShockConfig& shock, bool shock_applied);
DesignSpace new_design_space(const ShockConfig& shock);

/// sum_k alpha_k sqrt(x_k) + beta sqrt(m - p); empty when the offer is unaffordable.
template <class DerivedA, class DerivedX>
std::optional<typename DerivedA::Scalar> offer_utility(const Eigen::MatrixBase<DerivedA>& alpha,
                                                       typename DerivedA::Scalar beta,
                                                       const Eigen::MatrixBase<DerivedX>& x,
                                                       typename DerivedA::Scalar price,
                                                       typename DerivedA::Scalar budget) {
  using std::sqrt;
  if (price > budget) return std::nullopt;
  return alpha.dot(x.cwiseSqrt()) + beta * sqrt(budget - price);
}

inline std::optional<double> utility(const UserGroup& group, const Design& design, double price,
                                     double budget) {
  return offer_utility(group.alpha, group.beta, design, price, budget);
}

/// Utility of buying nothing: beta sqrt(m).
inline double null_utility(const UserGroup& group, double budget) {
  return group.beta * std::sqrt(budget);
}

struct OfferView {
  std::size_t supplier;
  const Design* design;
  double price;
};

/// One entry of a group's preference list; `supplier` is empty for the null offer.
struct RankedOffer {
  std::optional<std::size_t> supplier;
  double utility;
  double price;
  bool affordable = true;
};

/// Descending by utility, then lower price, then lower supplier id. The
/// null offer wins ties against real offers; unaffordable offers follow it.
std::vector<RankedOffer> rank_offers(const UserGroup& group, std::span<const OfferView> offers,
                                     double budget);

/// Integer group sizes round(rho_i G), fixed up by largest remainder to sum to G.
std::vector<std::size_t> group_sizes(const Eigen::VectorXd& shares, std::size_t population);

struct SessionResult {
  std::vector<std::size_t> order;       // groups in the order they came to market
  std::vector<std::size_t> sizes;       // users per group
  std::vector<std::size_t> purchases;   // units bought per group
  std::vector<double> attained;         // W_it per group
  std::vector<double> min_user_utility; // lowest utility any user of the group ended with
  std::vector<double> sales;            // units sold per supplier
  std::vector<double> demand;           // units demanded per supplier (incl. unmet)
  Eigen::MatrixXd sales_by_group;       // suppliers x groups
};

/// Rationed sequential clearing. Groups arrive in a random order and work
/// down their preference lists; stock left by earlier groups carries over.
/// An empty group reports the utility its first available choice would give.
SessionResult market_session(std::span<const UserGroup> groups, std::span<const Supplier> suppliers,
                             std::span<const std::size_t> sizes, double budget, Rng& rng);

/// rho_i W_i^r / sum_k rho_k W_k^r. Throws StateError when every weight is zero.
template <class DerivedS, class DerivedW>
Eigen::Matrix<typename DerivedS::Scalar, Eigen::Dynamic, 1> replicator_update(
    const Eigen::MatrixBase<DerivedS>& shares, const Eigen::MatrixBase<DerivedW>& utilities,
    typename DerivedS::Scalar strength) {
  using Scalar = typename DerivedS::Scalar;
  if (shares.size() != utilities.size())
    throw ParameterError("shares and utilities must have equal length");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w =
      shares.cwiseProduct(utilities.array().pow(strength).matrix());
  const Scalar total = w.sum();
  if (!(total > Scalar(0))) throw StateError("degenerate population: all replicator weights are zero");
  return w / total;
}

inline double unit_cost(const Design& design, const Eigen::VectorXd& gamma) {
  return gamma.dot(design);
}

/// Cost-plus price for a design.
inline double list_price(const Design& design, const Eigen::VectorXd& gamma, double markup) {
  return (1.0 + markup) * unit_cost(design, gamma);
}

/// Profit and wealth accounting, then partial adjustment of output toward demand.
void supplier_period_update(Supplier& supplier, double sales, double demand,
                            const MarketParams& params);

/// Selective mutation. Each active component moves by kappa * N(0,1) with
/// probability mu, clamped to the design space. The mutant (re-priced at
/// cost plus markup) replaces the design only if the target group strictly
/// prefers it. Returns true when the design changed.
bool mutate_design(Supplier& supplier, const UserGroup& target, double mu, double kappa,
                   const DesignSpace& space, const MarketParams& params, Rng& rng);

/// Roulette-wheel draw among the other suppliers, weight max(profit, floor).
std::size_t select_rival(std::span<const Supplier> suppliers, std::size_t self, double floor,
                         Rng& rng);

/// Copies the rival's components on a random nonempty subset of the active
/// dimensions; accepted only if the target group strictly prefers the result.
bool selective_transfer(Supplier& supplier, const Supplier& rival, const UserGroup& target,
                        const DesignSpace& space, const MarketParams& params, Rng& rng);

struct GroupRecord {
  TechType tech = TechType::old_tech;
  std::size_t size = 0;
  std::size_t purchases = 0;
  double attained_utility = 0.0;  // W_it
  double null_utility = 0.0;
  double min_user_utility = 0.0;
  double share_before = 0.0;
  double share_after = 0.0;
};

struct SupplierRecord {
  TechType tech = TechType::old_tech;
  std::size_t target_group = 0;
  double quantity = 0.0;  // offered in the session
  double sales = 0.0;
  double demand = 0.0;
  double price = 0.0;
  double profit = 0.0;
  double wealth = 0.0;
  double market_share = 0.0;
  double utility_before_innovation = 0.0;
  double utility_after_innovation = 0.0;
  Design design;  // after innovation
};

struct PeriodRecord {
  std::size_t period = 0;
  bool shock = false;
  std::vector<GroupRecord> groups;
  std::vector<SupplierRecord> suppliers;
  double aggregate_welfare = 0.0;  // share-weighted mean of W_it
  double total_sales = 0.0;
  double new_tech_sales = 0.0;
  double new_tech_sales_to_new_groups = 0.0;

  double new_tech_share() const { return total_sales > 0 ? new_tech_sales / total_sales : 0.0; }
};

/// Full market state for one run. A run is sequential; use one per thread.
class Market {
 public:
  /// Random initial population of old-technology groups and suppliers.
  Market(MarketParams params, Rng& rng);
  /// Explicit agents, for tests and hand-built scenarios.
  Market(MarketParams params, std::vector<UserGroup> groups, std::vector<Supplier> suppliers);

  const MarketParams& params() const { return params_; }
  std::span<const UserGroup> groups() const { return groups_; }
  std::span<const Supplier> suppliers() const { return suppliers_; }
  std::size_t period() const { return period_; }
  bool shock_applied() const { return shock_applied_; }

  DesignSpace design_space(const Supplier& s) const;

  /// Replaces dead agents with new-technology entrants and cuts their costs.
  /// Throws StateError if the shock already happened.
  void apply_shock(Rng& rng);

  /// session -> replicator -> accounting -> mutation -> transfer, with the
  /// shock applied first when the period equals t1.
  PeriodRecord step_period(Rng& rng);

 private:
  std::size_t choose_target(const Supplier& s) const;

  MarketParams params_;
  std::vector<UserGroup> groups_;
  std::vector<Supplier> suppliers_;
  std::size_t period_ = 0;
  bool shock_applied_ = false;
};

std::vector<PeriodRecord> run_market(const MarketParams& params, std::size_t periods,
                                     std::uint64_t seed);

enum class Outcome { substitution_a, substitution_b, lock_out, sharing };

std::string_view to_string(Outcome o);

struct OutcomeRule {
  double substitution_threshold = 0.9;
  double lockout_threshold = 0.1;
  std::size_t horizon = 100;  // periods after t1 that must be present
  std::size_t window = 10;    // trailing periods pooled for the decision
};

/// Pools sales over the trailing window. New-tech share above the
/// substitution threshold is a substitution: type A when most new-tech units
/// go to new-type groups, type B otherwise. Below the lock-out threshold is
/// lock-out; anything in between is sharing.
Outcome classify_outcome(std::span<const PeriodRecord> history, std::size_t t1,
                         const OutcomeRule& rule);

}  // namespace coevo::wb

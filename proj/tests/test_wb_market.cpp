#include <doctest.h>

#include <cmath>
#include <numeric>

#include "coevo/wb_market.hpp"

using namespace coevo;
using namespace coevo::wb;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

UserGroup group(Eigen::VectorXd alpha, double beta, double share = 1.0) {
  return {std::move(alpha), beta, share, TechType::old_tech};
}

Supplier supplier(Eigen::VectorXd design, double price, double quantity,
                  Eigen::VectorXd gamma = Eigen::VectorXd()) {
  Supplier s;
  s.design = std::move(design);
  s.price = price;
  s.quantity = quantity;
  s.gamma = gamma.size() ? gamma : Eigen::VectorXd::Zero(s.design.size());
  return s;
}

MarketParams small_params(std::size_t groups) {
  MarketParams p;
  p.groups = groups;
  p.population = 100;
  return p;
}

}  // namespace

TEST_CASE("utility arithmetic") {
  CHECK(*utility(group(vec({1, 0}), 1), vec({4, 0}), 1, 10) == doctest::Approx(5.0));
  CHECK(*utility(group(vec({0, 0}), 0.7), vec({4, 9}), 3, 10) == doctest::Approx(0.7 * std::sqrt(7.0)));
  CHECK(*utility(group(vec({2, 1}), 0.5), vec({9, 16}), 1, 5) == doctest::Approx(11.0));
  CHECK_FALSE(utility(group(vec({1, 0}), 1), vec({4, 0}), 11, 10).has_value());
}

TEST_CASE("null utility") {
  CHECK(null_utility(group(vec({1}), 1), 9) == doctest::Approx(3.0));
  CHECK(null_utility(group(vec({1}), 0), 9) == 0.0);
  const auto g = group(vec({0.3, 0.9}), 1.3);
  CHECK(*utility(g, vec({0, 0}), 0, 10) == null_utility(g, 10));
}

TEST_CASE("rank_offers") {
  const auto g = group(vec({1, 0}), 1);
  const Design good = vec({4, 0});
  SUBCASE("no offers") {
    const auto r = rank_offers(g, {}, 9);
    REQUIRE(r.size() == 1);
    CHECK_FALSE(r[0].supplier.has_value());
  }
  SUBCASE("single offer beating null") {
    std::vector<OfferView> o = {{0, &good, 0.0}};
    const auto r = rank_offers(g, o, 9);
    REQUIRE(r.size() == 2);
    CHECK(r[0].supplier == std::optional<std::size_t>(0));
    CHECK_FALSE(r[1].supplier.has_value());
  }
  SUBCASE("identical offers: lower id first") {
    std::vector<OfferView> o = {{3, &good, 1.0}, {1, &good, 1.0}};
    const auto r = rank_offers(g, o, 9);
    CHECK(r[0].supplier == std::optional<std::size_t>(1));
    CHECK(r[1].supplier == std::optional<std::size_t>(3));
  }
  SUBCASE("null wins a tie; unaffordable goes last") {
    const Design zero = vec({0, 0});
    std::vector<OfferView> o = {{0, &zero, 0.0}, {1, &good, 50.0}, {2, &good, 1.0}};
    const auto r = rank_offers(g, o, 9);
    REQUIRE(r.size() == 4);
    CHECK(r[0].supplier == std::optional<std::size_t>(2));
    CHECK_FALSE(r[1].supplier.has_value());
    CHECK(r[2].supplier == std::optional<std::size_t>(0));
    CHECK(r[3].supplier == std::optional<std::size_t>(1));
    CHECK_FALSE(r[3].affordable);
  }
}

TEST_CASE("group sizes sum to the population") {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    Eigen::VectorXd s(7);
    for (Eigen::Index i = 0; i < 7; ++i) s[i] = rng.uniform();
    s /= s.sum();
    const auto sizes = group_sizes(s, 1001);
    CHECK(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == 1001);
    for (Eigen::Index i = 0; i < 7; ++i)
      CHECK(std::abs(static_cast<double>(sizes[static_cast<std::size_t>(i)]) - s[i] * 1001) < 1.0);
  }
}

TEST_CASE("session: one supplier with ample stock serves everyone") {
  std::vector<UserGroup> gs = {group(vec({1, 0}), 1), group(vec({2, 0}), 1)};
  std::vector<Supplier> ss = {supplier(vec({4, 0}), 1, 1000)};
  std::vector<std::size_t> sizes = {30, 20};
  Rng rng(1);
  const auto r = market_session(gs, ss, sizes, 10, rng);
  CHECK(r.purchases == std::vector<std::size_t>{30, 20});
  CHECK(r.sales[0] == 50);
  CHECK(r.attained[0] == doctest::Approx(5.0));
  CHECK(r.attained[1] == doctest::Approx(7.0));
}

TEST_CASE("session: null ranked first means no purchases") {
  std::vector<UserGroup> gs = {group(vec({0, 0}), 1)};
  std::vector<Supplier> ss = {supplier(vec({4, 0}), 1, 1000)};
  std::vector<std::size_t> sizes = {10};
  Rng rng(1);
  const auto r = market_session(gs, ss, sizes, 9, rng);
  CHECK(r.purchases[0] == 0);
  CHECK(r.sales[0] == 0);
  CHECK(r.attained[0] == doctest::Approx(3.0));
}

TEST_CASE("session: rationing cascades to the next offer") {
  // Supplier 0 gives 2 + 3 = 5, supplier 1 gives 1 + 3 = 4, null gives 3.
  std::vector<UserGroup> gs = {group(vec({1, 0}), 1)};
  std::vector<Supplier> ss = {supplier(vec({4, 0}), 1, 5), supplier(vec({1, 0}), 1, 100)};
  std::vector<std::size_t> sizes = {10};
  Rng rng(1);
  const auto r = market_session(gs, ss, sizes, 10, rng);
  CHECK(r.sales[0] == 5);
  CHECK(r.sales[1] == 5);
  CHECK(r.demand[0] == 10);
  CHECK(r.demand[1] == 5);
  CHECK(r.purchases[0] == 10);
  CHECK(r.attained[0] == doctest::Approx((5 * 5.0 + 5 * 4.0) / 10));
  CHECK(r.min_user_utility[0] == doctest::Approx(4.0));
}

TEST_CASE("session: stock left by earlier groups carries over") {
  std::vector<UserGroup> gs = {group(vec({1, 0}), 1), group(vec({1, 0}), 1)};
  std::vector<Supplier> ss = {supplier(vec({4, 0}), 1, 15)};
  std::vector<std::size_t> sizes = {10, 10};
  Rng rng(4);
  const auto r = market_session(gs, ss, sizes, 10, rng);
  CHECK(r.sales[0] == 15);
  CHECK(r.purchases[r.order[0]] == 10);
  CHECK(r.purchases[r.order[1]] == 5);
  CHECK(r.attained[r.order[1]] == doctest::Approx((5 * 5.0 + 5 * std::sqrt(10.0)) / 10));
}

TEST_CASE("replicator examples") {
  CHECK(replicator_update(vec({0.5, 0.5}), vec({4, 1}), 1.0).isApprox(vec({0.8, 0.2}), 1e-15));
  const auto rho = vec({0.1, 0.2, 0.7});
  CHECK(replicator_update(rho, vec({3, 9, 1}), 0.0).isApprox(rho, 1e-15));
  CHECK(replicator_update(rho, vec({2, 2, 2}), 3.5).isApprox(rho, 1e-15));
  CHECK_THROWS_AS(replicator_update(vec({0.5, 0.5}), vec({0, 0}), 1.0), StateError);
}

TEST_CASE("replicator matches the direct formula and preserves order") {
  Rng rng(8);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.below(8));
    Eigen::VectorXd rho(m), w(m);
    for (Eigen::Index i = 0; i < m; ++i) rho[i] = rng.uniform(), w[i] = rng.uniform(0.1, 10.0);
    rho /= rho.sum();
    const double r = rng.uniform(0.0, 4.0);
    const auto out = replicator_update(rho, w, r);
    double denom = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) denom += rho[k] * std::pow(w[k], r);
    for (Eigen::Index i = 0; i < m; ++i)
      REQUIRE(std::abs(out[i] - rho[i] * std::pow(w[i], r) / denom) <= 1e-12);
    CHECK(std::abs(out.sum() - 1.0) <= 1e-12);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j)
        if (w[i] > w[j] && r > 0) CHECK(out[i] / out[j] > rho[i] / rho[j]);
  }
}

TEST_CASE("unit cost and price") {
  CHECK(unit_cost(vec({2, 3}), vec({0, 0})) == 0.0);
  CHECK(unit_cost(vec({2, 3}), vec({1, 1})) == doctest::Approx(5.0));
  CHECK(unit_cost(vec({2, 3}), 0.5 * vec({1, 1})) == doctest::Approx(2.5));
  CHECK(list_price(vec({2, 3}), vec({1, 1}), 0.2) == doctest::Approx(6.0));
}

TEST_CASE("supplier accounting") {
  MarketParams p;
  p.output_adjustment = 0.5;
  auto s = supplier(vec({1, 1, 0, 0}), 2.0, 10, vec({0.5, 0.5, 0, 0}));
  SUBCASE("sales = Q = demand keeps Q") {
    supplier_period_update(s, 10, 10, p);
    CHECK(s.quantity == 10);
    CHECK(s.profit == doctest::Approx(2 * 10 - 1 * 10));
  }
  SUBCASE("zero demand shrinks Q by (1 - lambda)") {
    supplier_period_update(s, 0, 0, p);
    CHECK(s.quantity == doctest::Approx(5));
  }
  SUBCASE("break-even leaves wealth unchanged") {
    s.wealth = 7;
    supplier_period_update(s, 5, 8, p);
    CHECK(s.profit == doctest::Approx(0.0));
    CHECK(s.wealth == doctest::Approx(7.0));
  }
}

TEST_CASE("mutation") {
  MarketParams p;
  const auto target = group(vec({1, 1, 1, 0}), 1);
  const DesignSpace space = old_design_space(p.shock, false);
  Rng rng(6);
  SUBCASE("mu = 0 leaves the design") {
    auto s = supplier(vec({1, 2, 3, 0}), list_price(vec({1, 2, 3, 0}), p.gamma, p.markup), 10, p.gamma);
    const Design before = s.design;
    for (int t = 0; t < 100; ++t) CHECK_FALSE(mutate_design(s, target, 0.0, 0.3, space, p, rng));
    CHECK(s.design == before);
  }
  SUBCASE("target utility never decreases; designs stay in the space") {
    auto s = supplier(vec({1, 2, 3, 0}), list_price(vec({1, 2, 3, 0}), p.gamma, p.markup), 10, p.gamma);
    double u = *utility(target, s.design, s.price, p.budget);
    int accepted = 0;
    for (int t = 0; t < 2000; ++t) {
      accepted += mutate_design(s, target, 1.0, 1e-3, space, p, rng);
      const double v = *utility(target, s.design, s.price, p.budget);
      REQUIRE(v >= u);
      REQUIRE(space.contains(s.design));
      u = v;
    }
    CHECK(accepted > 0);
  }
}

TEST_CASE("rival selection") {
  Rng rng(10);
  SUBCASE("one rival is always chosen") {
    std::vector<Supplier> ss(2);
    for (int t = 0; t < 100; ++t) CHECK(select_rival(ss, 0, 1e-9, rng) == 1);
  }
  SUBCASE("no rival") {
    std::vector<Supplier> ss(1);
    CHECK_THROWS_AS(select_rival(ss, 0, 1e-9, rng), StateError);
  }
  SUBCASE("profit-proportional 3:1") {
    std::vector<Supplier> ss(3);
    ss[0].profit = 100;
    ss[1].profit = 3;
    ss[2].profit = 1;
    int first = 0;
    const int draws = 100000;
    for (int t = 0; t < draws; ++t) first += select_rival(ss, 0, 1e-9, rng) == 1;
    CHECK(static_cast<double>(first) / draws == doctest::Approx(0.75).epsilon(0.02));
  }
  SUBCASE("nonpositive profits give a uniform wheel") {
    std::vector<Supplier> ss(4);
    ss[1].profit = -5;
    ss[2].profit = 0;
    ss[3].profit = -1;
    std::vector<int> hits(4, 0);
    const int draws = 90000;
    for (int t = 0; t < draws; ++t) ++hits[select_rival(ss, 0, 1e-9, rng)];
    CHECK(hits[0] == 0);
    for (int j = 1; j < 4; ++j) CHECK(hits[j] / double(draws) == doctest::Approx(1.0 / 3).epsilon(0.03));
  }
}

TEST_CASE("selective transfer") {
  MarketParams p;
  const auto target = group(vec({1, 1, 1, 0}), 1);
  Rng rng(12);
  SUBCASE("components come from self or rival; rival untouched") {
    const DesignSpace space = old_design_space(p.shock, false);
    for (int t = 0; t < 500; ++t) {
      Design own = Design::Zero(4), theirs = Design::Zero(4);
      for (int k = 0; k < 3; ++k) own[k] = rng.uniform(0, 10), theirs[k] = rng.uniform(0, 10);
      auto s = supplier(own, list_price(own, p.gamma, p.markup), 10, p.gamma);
      const auto rival = supplier(theirs, list_price(theirs, p.gamma, p.markup), 10, p.gamma);
      const Design rival_before = rival.design;
      const double u0 = *utility(target, s.design, s.price, p.budget);
      selective_transfer(s, rival, target, space, p, rng);
      for (int k = 0; k < 4; ++k) CHECK((s.design[k] == own[k] || s.design[k] == theirs[k]));
      CHECK(rival.design == rival_before);
      CHECK(*utility(target, s.design, s.price, p.budget) >= u0);
    }
  }
  SUBCASE("single active dimension: a better rival is copied exactly") {
    const DesignSpace space{0, 1, 10.0};
    const auto own = vec({1, 0, 0, 0}), theirs = vec({4, 0, 0, 0});
    auto s = supplier(own, list_price(own, p.gamma, p.markup), 10, p.gamma);
    const auto rival = supplier(theirs, list_price(theirs, p.gamma, p.markup), 10, p.gamma);
    CHECK(selective_transfer(s, rival, target, space, p, rng));
    CHECK(s.design == rival.design);
  }
  SUBCASE("identical rival changes nothing") {
    const DesignSpace space = old_design_space(p.shock, false);
    const auto own = vec({1, 2, 3, 0});
    auto s = supplier(own, list_price(own, p.gamma, p.markup), 10, p.gamma);
    const auto rival = s;
    for (int t = 0; t < 50; ++t) CHECK_FALSE(selective_transfer(s, rival, target, space, p, rng));
    CHECK(s.design == own);
  }
}

TEST_CASE("technology shock") {
  Rng rng(21);
  SUBCASE("zero cutoffs replace nobody and lift the cap") {
    MarketParams p;
    p.shock.cutoff_supplier = 0.0;
    p.shock.cutoff_user = 0.0;
    Market m(p, rng);
    m.apply_shock(rng);
    for (const auto& s : m.suppliers()) {
      CHECK(s.tech == TechType::old_tech);
      CHECK(std::isinf(m.design_space(s).cap));
    }
    for (const auto& g : m.groups()) CHECK(g.tech == TechType::old_tech);
  }
  SUBCASE("every supplier below the cutoff gives a full entrant cohort") {
    MarketParams p;
    p.shock.cutoff_supplier = 0.5;  // nobody has sold yet, so every share is 0
    Market m(p, rng);
    m.apply_shock(rng);
    for (const auto& s : m.suppliers()) {
      CHECK(s.tech == TechType::new_tech);
      CHECK(new_design_space(p.shock).contains(s.design));
      CHECK(s.gamma.isApprox(p.gamma * p.shock.theta));
    }
  }
  SUBCASE("theta = 1 keeps unscaled costs") {
    MarketParams p;
    p.shock.cutoff_supplier = 0.5;
    p.shock.theta = 1.0;
    Market m(p, rng);
    m.apply_shock(rng);
    for (const auto& s : m.suppliers()) CHECK(s.gamma == p.gamma);
  }
  SUBCASE("small groups are replaced by new-type groups") {
    MarketParams p;
    p.shock.cutoff_user = 0.5;  // every group starts at 1/5
    Market m(p, rng);
    m.apply_shock(rng);
    double total = 0.0;
    for (const auto& g : m.groups()) {
      CHECK(g.tech == TechType::new_tech);
      for (std::size_t k = 0; k + 1 < p.shock.h2; ++k) CHECK(g.alpha[static_cast<Eigen::Index>(k)] == 0.0);
      total += g.share;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("a second shock is a state error") {
    Market m(MarketParams{}, rng);
    m.apply_shock(rng);
    CHECK_THROWS_AS(m.apply_shock(rng), StateError);
  }
}

TEST_CASE("step_period with no suppliers keeps equal-W shares") {
  MarketParams p = small_params(3);
  std::vector<UserGroup> gs = {group(vec({1, 0, 0, 0}), 1, 0.2), group(vec({0, 1, 0, 0}), 1, 0.3),
                               group(vec({1, 1, 0, 0}), 1, 0.5)};
  Market m(p, gs, {});
  Rng rng(1);
  for (int t = 0; t < 5; ++t) {
    const auto rec = m.step_period(rng);
    for (const auto& g : rec.groups) CHECK(g.attained_utility == doctest::Approx(g.null_utility));
  }
  CHECK(m.groups()[0].share == doctest::Approx(0.2));
  CHECK(m.groups()[2].share == doctest::Approx(0.5));
}

TEST_CASE("single supplier, single group: target utility is non-decreasing") {
  MarketParams p = small_params(1);
  p.suppliers = 1;
  p.shock.t1 = 1000;
  std::vector<UserGroup> gs = {group(vec({0.8, 0.5, 0.3, 0}), 1.0, 1.0)};
  const auto x = vec({1, 1, 1, 0});
  std::vector<Supplier> ss = {supplier(x, list_price(x, p.gamma, p.markup), 100, p.gamma)};
  Market m(p, gs, ss);
  Rng rng(2);
  double prev = -INFINITY;
  for (int t = 0; t < 100; ++t) {
    const auto rec = m.step_period(rng);
    const auto& s = rec.suppliers[0];
    CHECK(s.utility_before_innovation >= prev);
    CHECK(s.utility_after_innovation >= s.utility_before_innovation);
    prev = s.utility_after_innovation;
  }
}

TEST_CASE("same seed replays the same history") {
  const auto a = run_market(MarketParams{}, 150, 5);
  const auto b = run_market(MarketParams{}, 150, 5);
  REQUIRE(a.size() == b.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    CHECK(a[t].aggregate_welfare == b[t].aggregate_welfare);
    for (std::size_t j = 0; j < a[t].suppliers.size(); ++j)
      CHECK(a[t].suppliers[j].design == b[t].suppliers[j].design);
  }
}

TEST_CASE("run invariants hold period by period") {
  MarketParams p;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto hist = run_market(p, 200, seed);
    for (const auto& rec : hist) {
      double share = 0.0;
      for (const auto& g : rec.groups) {
        share += g.share_after;
        CHECK(g.attained_utility >= g.null_utility - 1e-12);
        CHECK(g.min_user_utility >= g.null_utility - 1e-12);
        CHECK(g.purchases <= g.size);
      }
      CHECK(std::abs(share - 1.0) <= 1e-12);
      for (const auto& s : rec.suppliers) {
        CHECK(s.sales <= s.quantity);
        CHECK(s.price >= 0.0);
        CHECK(s.utility_after_innovation >= s.utility_before_innovation);
      }
    }
  }
}

TEST_CASE("outcome classification") {
  auto history = [](double old_sales, double new_sales, double to_new) {
    std::vector<PeriodRecord> h(120);
    for (auto& r : h) {
      r.total_sales = old_sales + new_sales;
      r.new_tech_sales = new_sales;
      r.new_tech_sales_to_new_groups = to_new;
    }
    return h;
  };
  const OutcomeRule rule{0.9, 0.1, 20, 10};
  CHECK(classify_outcome(history(100, 0, 0), 100, rule) == Outcome::lock_out);
  CHECK(classify_outcome(history(0, 100, 100), 100, rule) == Outcome::substitution_a);
  CHECK(classify_outcome(history(0, 100, 10), 100, rule) == Outcome::substitution_b);
  CHECK(classify_outcome(history(50, 50, 50), 100, rule) == Outcome::sharing);
  CHECK_THROWS_AS(classify_outcome(history(1, 1, 1), 110, rule), ParameterError);
  CHECK(to_string(Outcome::substitution_a) == "substitution_A");
}

TEST_CASE("parameter validation") {
  MarketParams p;
  p.shock.h2 = 3;
  p.shock.h1 = 2;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  MarketParams q;
  q.gamma = Eigen::VectorXd::Constant(3, 0.1);
  CHECK_THROWS_AS(q.validate(), ParameterError);
}

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <random>

#include "superhedge/errors.hpp"
#include "superhedge/lifting.hpp"

using namespace superhedge;

namespace {

ModelParams params(int n, double lo, double hi, int k = 1) {
  ModelParams p;
  p.s0 = 1.0;
  p.periods = n;
  p.sigma_low = lo;
  p.sigma_high = hi;
  p.refinement = k;
  return p;
}

ScenarioPath random_path(std::mt19937_64& eng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> mag(lo, hi);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> r;
  for (int i = 0; i < n; ++i) r.push_back(sign(eng) ? mag(eng) : -mag(eng));
  return ScenarioPath::from_returns(1.0, r);
}

}  // namespace

TEST(LiftWeights, ExtremeAndMidpointValues) {
  const double l2 = std::log(2.0);
  const LiftWeights w = compute_weights(ScenarioPath::from_returns(1.0, {l2, -l2, 0.0}), l2);
  EXPECT_NEAR(w.up[0], 1.0, 1e-15);
  EXPECT_NEAR(w.up[1], 0.0, 1e-15);
  EXPECT_NEAR(w.up[2], 1.0 / 3.0, 1e-15);
  EXPECT_THROW(compute_weights(ScenarioPath::from_returns(1.0, {0.3}), 0.2), DomainError);
  EXPECT_THROW(compute_weights(ScenarioPath::from_returns(1.0, {0.1}), 0.0), DomainError);
}

TEST(LiftWeights, ReconstructEachReturn) {
  std::mt19937_64 eng(1);
  for (int i = 0; i < 100; ++i) {
    const ScenarioPath p = random_path(eng, 8, 0.0, 0.3);
    const LiftWeights w = compute_weights(p, 0.3);
    for (std::size_t n = 0; n < 8; ++n) {
      const double mix = w.up[n] * std::exp(0.3) + w.down(n) * std::exp(-0.3);
      EXPECT_NEAR(mix, std::exp(p.returns[n]), 1e-14);
      EXPECT_GE(w.up[n], 0.0);
      EXPECT_LE(w.up[n], 1.0);
    }
  }
}

TEST(WordWeights, SumToOneReconstructAndMarginalise) {
  std::mt19937_64 eng(2);
  for (int i = 0; i < 100; ++i) {
    const int big_n = 1 + i % 12;
    const ScenarioPath p = random_path(eng, big_n, 0.1, 0.25);
    const LiftWeights w = compute_weights(p, 0.25);
    const std::vector<double> full = word_weights(w, big_n);
    for (int n = 0; n <= big_n; ++n) {
      const std::vector<double> part = word_weights(w, n);
      double sum = 0.0, price = 0.0;
      for (std::size_t id = 0; id < part.size(); ++id) {
        sum += part[id];
        const int ups = std::popcount(id);
        price += part[id] * std::exp((2.0 * ups - n) * 0.25);
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
      EXPECT_NEAR(price / p.prices[static_cast<std::size_t>(n)], 1.0, 1e-12);
      EXPECT_NEAR(reconstructed_price(w, 1.0, 0.25, n) / p.prices[static_cast<std::size_t>(n)], 1.0,
                  1e-12);
      // Each length-n word carries the mass of all its extensions.
      const std::size_t tail = std::size_t{1} << (big_n - n);
      for (std::size_t id = 0; id < part.size(); ++id) {
        double ext = 0.0;
        for (std::size_t s = 0; s < tail; ++s) ext += full[id * tail + s];
        EXPECT_NEAR(ext, part[id], 1e-12);
      }
    }
  }
  EXPECT_THROW(word_weights(compute_weights(ScenarioPath::from_returns(1.0, {0.1}), 0.2), 2),
               ValidationError);
}

TEST(LiftStrategy, ExtremePathsReproduceTheBinomialStrategy) {
  const LatticeModel bt = build_tree(params(4, 0.2, 0.2));
  const PrimalSolution s = solve_primal_dp(bt, CostSpec::quadratic(1.0), PayoffSpec::call(1.0));
  for (std::size_t leaf = 0; leaf < bt.leaf_count(); ++leaf) {
    std::vector<double> r;
    for (std::size_t b : bt.path_branches(4, leaf)) r.push_back(bt.branches()[b]);
    const ScenarioPath p = ScenarioPath::from_returns(1.0, r);
    const std::vector<double> g = lift_strategy(s.strategy, bt, p);
    for (int n = 0; n < 4; ++n) {
      EXPECT_NEAR(g[static_cast<std::size_t>(n)], s.strategy.holding(n, bt.node_on_path(r, n)), 1e-12);
    }
  }
}

TEST(LiftStrategy, TwoWordHandComputation) {
  const double l2 = std::log(2.0);
  const LatticeModel bt = build_tree(params(2, l2, l2));
  Strategy st;
  st.initial_capital = 0.0;
  st.holdings = {{0.7}, {0.3, 1.1}};
  const std::vector<double> g = lift_strategy(st, bt, ScenarioPath::from_returns(1.0, {0.0, 0.0}));
  EXPECT_NEAR(g[0], 0.7, 1e-15);
  EXPECT_NEAR(g[1], (2.0 / 3.0) * 0.3 * 0.5 + (1.0 / 3.0) * 1.1 * 2.0, 1e-14);
  EXPECT_THROW(lift_strategy(st, build_tree(params(2, 0.1, 0.2)),
                             ScenarioPath::from_returns(1.0, {0.1, 0.1})),
               ShapeError);
}

TEST(LiftStrategy, AggregatedCostIsBelowWordAverage) {
  const double sh = 0.2;
  const LatticeModel bt = build_tree(params(3, sh, sh));
  const CostSpec g = CostSpec::quadratic(0.8);
  const PrimalSolution s = solve_primal_dp(bt, g, PayoffSpec::call(1.0));
  std::mt19937_64 eng(6);
  for (int i = 0; i < 200; ++i) {
    const ScenarioPath p = random_path(eng, 3, 0.05, sh);
    const LiftWeights w = compute_weights(p, sh);
    const std::vector<double> gam = lift_strategy(s.strategy, bt, p);
    for (int n = 1; n < 3; ++n) {
      const auto un = static_cast<std::size_t>(n);
      const std::vector<double> lam = word_weights(w, n);
      double avg = 0.0;
      for (std::size_t id = 0; id < lam.size(); ++id) {
        const double sbar = bt.stock(n, id);
        avg += lam[id] * g((s.strategy.holding(n, id) - s.strategy.holding(n - 1, bt.parent(id))) * sbar);
      }
      EXPECT_LE(g((gam[un] - gam[un - 1]) * p.prices[un]), avg + 1e-12);
    }
  }
}

TEST(LiftStrategy, RefusesLongHorizons) {
  const LatticeModel bt = build_tree(params(21, 0.1, 0.1), std::size_t{1} << 22);
  Strategy st;
  st.holdings.assign(21, {});
  EXPECT_THROW(lift_strategy(st, bt, ScenarioPath::from_returns(1.0, std::vector<double>(21, 0.1))),
               CapacityError);
}

TEST(Reduction, FrictionlessAndConstantPayoffs) {
  const double l2 = std::log(2.0);
  const ReductionReport fr =
      convex_reduction_experiment(params(1, 0.5 * l2, l2), CostSpec::zero(), PayoffSpec::call(1.0),
                                  1e-6, 1000, 3);
  EXPECT_NEAR(fr.value_bar, 1.0 / 3.0, 1e-12);
  for (const ReductionRow& r : fr.rows) EXPECT_NEAR(r.value_k, 1.0 / 3.0, 1e-10);
  EXPECT_EQ(fr.violations, 0u);

  const ReductionReport c = convex_reduction_experiment(
      params(2, 0.1, 0.2), CostSpec::quadratic(1.0), PayoffSpec::constant(1.5), 1e-6, 100, 3);
  EXPECT_NEAR(c.value_bar, 1.5, 1e-12);
  for (const ReductionRow& r : c.rows) EXPECT_NEAR(r.value_k, 1.5, 1e-12);
}

TEST(Reduction, QuadraticCostEquality) {
  const ReductionReport r = convex_reduction_experiment(
      params(2, 0.1, 0.2), CostSpec::quadratic(1.0), PayoffSpec::call(1.0), 1e-6, 10000, 5);
  ASSERT_EQ(r.rows.size(), 3u);
  for (const ReductionRow& row : r.rows) EXPECT_LE(row.gap, 1e-4 + row.grid_error) << row.k;
  EXPECT_GE(r.min_slack, -1e-9);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_EQ(r.scenarios, 10000u);
}

TEST(Reduction, RefusesUnsupportedHypotheses) {
  const CostSpec path_cost = CostSpec::custom(
      [](const CostContext& ctx, double b) { return ctx.prices.back() * b * b; }, true);
  EXPECT_THROW(convex_reduction_experiment(params(2, 0.1, 0.2), path_cost, PayoffSpec::call(1.0),
                                           0.0, 10, 1),
               PreconditionError);
  const PayoffSpec digital = PayoffSpec::custom(
      [](std::span<const double> s) { return s.back() > 1.0 ? 1.0 : 0.0; }, false, "digital");
  EXPECT_THROW(convex_reduction_experiment(params(2, 0.1, 0.2), CostSpec::zero(), digital, 0.0,
                                           10, 1),
               PreconditionError);
}

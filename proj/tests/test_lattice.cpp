#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "superhedge/errors.hpp"
#include "superhedge/lattice.hpp"

using namespace superhedge;

namespace {

ModelParams params(double s0, int n, double lo, double hi, int k = 1) {
  ModelParams p;
  p.s0 = s0;
  p.periods = n;
  p.sigma_low = lo;
  p.sigma_high = hi;
  p.refinement = k;
  return p;
}

// Brute-force grid: all ±((j/k)lo + (1−j/k)hi), sorted and deduplicated.
std::vector<double> grid_oracle(double lo, double hi, int k) {
  std::set<double> s;
  for (int j = 0; j <= k; ++j) {
    const double m = (static_cast<double>(j) / k) * lo + (1.0 - static_cast<double>(j) / k) * hi;
    s.insert(m);
    s.insert(-m);
  }
  std::vector<double> out(s.begin(), s.end());
  std::vector<double> dedup;
  for (double v : out) {
    if (dedup.empty() || std::abs(v - dedup.back()) > 1e-15) dedup.push_back(v == 0.0 ? 0.0 : v);
  }
  return dedup;
}

}  // namespace

TEST(ModelParams, RejectsInvalidFields) {
  EXPECT_THROW(params(0.0, 1, 0.1, 0.2).validate(), ValidationError);
  EXPECT_THROW(params(1.0, 0, 0.1, 0.2).validate(), ValidationError);
  EXPECT_THROW(params(1.0, 1, 0.3, 0.2).validate(), ValidationError);
  EXPECT_THROW(params(1.0, 1, -0.1, 0.2).validate(), ValidationError);
  EXPECT_THROW(params(1.0, 1, 0.1, 0.2, 0).validate(), ValidationError);
  EXPECT_NO_THROW(params(1.0, 1, 0.0, 0.2).validate());
}

TEST(BranchSet, BinomialCollapse) {
  const double l2 = std::log(2.0);
  const LatticeModel t = build_tree(params(1.0, 1, l2, l2));
  ASSERT_EQ(t.branch_count(), 2u);
  EXPECT_DOUBLE_EQ(t.branches()[0], -l2);
  EXPECT_DOUBLE_EQ(t.branches()[1], l2);
  EXPECT_NEAR(t.stock(1, 0), 0.5, 1e-15);
  EXPECT_NEAR(t.stock(1, 1), 2.0, 1e-15);
}

TEST(BranchSet, FourValueGridAtFirstRefinement) {
  const LatticeModel t = build_tree(params(1.0, 1, 0.1, 0.2));
  const std::vector<double> want{-0.2, -0.1, 0.1, 0.2};
  ASSERT_EQ(t.branch_count(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(t.branches()[i], want[i]);
  EXPECT_EQ(t.leaf_count(), 4u);
}

TEST(BranchSet, ZeroFloorDeduplicates) {
  const LatticeModel t = build_tree(params(1.0, 2, 0.0, 0.2));
  ASSERT_EQ(t.branch_count(), 3u);
  EXPECT_DOUBLE_EQ(t.branches()[1], 0.0);
  EXPECT_EQ(t.leaf_count(), 9u);
}

TEST(BranchSet, MatchesEnumerationUpToFiveRefinements) {
  for (int k = 1; k <= 5; ++k) {
    for (auto [lo, hi] : {std::pair{0.1, 0.2}, std::pair{0.0, 0.3}, std::pair{0.15, 0.15}}) {
      const BranchSet b = BranchSet::grid(lo, hi, k);
      const std::vector<double> want = grid_oracle(lo, hi, k);
      ASSERT_EQ(b.size(), want.size()) << "k=" << k << " lo=" << lo;
      for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(b[i], want[i], 1e-15);
      for (std::size_t i = 1; i < b.size(); ++i) EXPECT_LT(b[i - 1], b[i]);
      EXPECT_NEAR(b.mesh(), (hi - lo) / k, 1e-15);
    }
  }
}

TEST(LatticeModel, StocksMatchPathProducts) {
  const LatticeModel t = build_tree(params(1.3, 3, 0.1, 0.2, 2));
  for (int n = 0; n <= 3; ++n) {
    ASSERT_EQ(t.level_size(n), static_cast<std::size_t>(std::pow(6.0, n)));
    for (std::size_t id = 0; id < t.level_size(n); ++id) {
      double sum = 0.0;
      for (std::size_t b : t.path_branches(n, id)) sum += t.branches()[b];
      const double want = 1.3 * std::exp(sum);
      EXPECT_NEAR(t.stock(n, id) / want - 1.0, 0.0, 1e-14);
      const std::vector<double> prices = t.path_prices(n, id);
      EXPECT_DOUBLE_EQ(prices.back(), t.stock(n, id));
    }
  }
}

TEST(LatticeModel, MixedRadixIndexing) {
  const LatticeModel t = build_tree(params(1.0, 3, 0.1, 0.2));
  const std::size_t leaf = t.child(t.child(t.child(0, 2), 0), 3);
  EXPECT_EQ(leaf, 2u * 16 + 0 * 4 + 3);
  EXPECT_EQ(t.parent(leaf), 2u * 4);
  EXPECT_EQ(t.branch_of(leaf), 3u);
  const std::vector<std::size_t> br = t.path_branches(3, leaf);
  EXPECT_EQ(br, (std::vector<std::size_t>{2, 0, 3}));
  const ScenarioPath p = ScenarioPath::from_returns(1.0, {0.1, -0.2, 0.2});
  EXPECT_EQ(t.leaf_of(p), leaf);
  EXPECT_EQ(t.node_on_path(p.returns, 2), 8u);
  const TreeNode root = t.node(0, 0);
  EXPECT_FALSE(root.parent.has_value());
  const TreeNode nd = t.node(3, leaf);
  EXPECT_EQ(nd.parent, std::optional<std::size_t>{8});
  EXPECT_EQ(nd.branch_index, std::optional<std::size_t>{3});
}

TEST(LatticeModel, NodeBudgetIsEnforced) {
  EXPECT_THROW(build_tree(params(1.0, 12, 0.1, 0.2), 1000), CapacityError);
  EXPECT_NO_THROW(build_tree(params(1.0, 4, 0.1, 0.2), 256));
}

TEST(LatticeModel, JsonDumpHasEveryLevel) {
  const LatticeModel t = build_tree(params(1.0, 2, 0.1, 0.1));
  const std::string js = t.to_json();
  EXPECT_NE(js.find("levels"), std::string::npos);
  EXPECT_NE(js.find("branch_index"), std::string::npos);
}

TEST(ScenarioPath, PricesFollowCumulativeReturns) {
  const ScenarioPath p = ScenarioPath::from_returns(2.0, {0.1, -0.15});
  ASSERT_EQ(p.prices.size(), 3u);
  EXPECT_DOUBLE_EQ(p.prices[0], 2.0);
  EXPECT_NEAR(p.prices[2], 2.0 * std::exp(-0.05), 1e-15);
}

TEST(Projection, FloorsEachReturn) {
  const LatticeModel t = build_tree(params(1.0, 3, 0.1, 0.2));
  const ScenarioPath p = ScenarioPath::from_returns(1.0, {0.17, -0.17, 0.2});
  const ScenarioPath q = project_scenario(p, t);
  EXPECT_DOUBLE_EQ(q.returns[0], 0.1);
  EXPECT_DOUBLE_EQ(q.returns[1], -0.2);
  EXPECT_DOUBLE_EQ(q.returns[2], 0.2);
  const ScenarioPath qq = project_scenario(q, t);
  EXPECT_EQ(qq.returns, q.returns);
}

TEST(Projection, RejectsReturnsOutsideTheBand) {
  const LatticeModel t = build_tree(params(1.0, 1, 0.1, 0.2));
  EXPECT_THROW(project_scenario(ScenarioPath::from_returns(1.0, {0.05}), t), DomainError);
  EXPECT_THROW(project_scenario(ScenarioPath::from_returns(1.0, {0.25}), t), DomainError);
  EXPECT_NO_THROW(project_scenario(ScenarioPath::from_returns(1.0, {0.2 + 1e-13}), t));
}

TEST(Projection, ErrorWithinMeshAndShrinksWithRefinement) {
  const ModelParams base = params(1.0, 6, 0.1, 0.3);
  const auto paths = sample_scenarios(base, 400, 11);
  double prev_gap = 0.0;
  for (int k : {1, 2, 4, 8}) {
    ModelParams p = base;
    p.refinement = k;
    p.periods = 1;
    const LatticeModel t = build_tree(p);
    double gap = 0.0;
    for (const ScenarioPath& path : paths) {
      double sum_in = 0.0, sum_out = 0.0;
      for (double x : path.returns) {
        const double y = t.branches().floor_value(x);
        EXPECT_LE(x - y, t.branches().mesh() + 1e-15);
        EXPECT_GE(x - y, -1e-15);
        sum_in += x;
        sum_out += y;
        gap = std::max(gap, std::abs(std::exp(sum_in) - std::exp(sum_out)));
      }
    }
    if (k > 1) {
      EXPECT_LE(gap, 0.5 * prev_gap * 1.2) << "k=" << k;
    }
    prev_gap = gap;
  }
}

TEST(Sampling, DeterministicAndInsideTheBand) {
  const ModelParams p = params(1.0, 5, 0.1, 0.2);
  const auto a = sample_scenarios(p, 3, 7);
  const auto b = sample_scenarios(p, 3, 7);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a[i].returns, b[i].returns);
  double lo = 1.0, hi = 0.0;
  for (const ScenarioPath& s : sample_scenarios(p, 10000, 3)) {
    for (double x : s.returns) {
      lo = std::min(lo, std::abs(x));
      hi = std::max(hi, std::abs(x));
    }
  }
  EXPECT_GE(lo, 0.1);
  EXPECT_LE(hi, 0.2);
  for (const ScenarioPath& s : sample_scenarios(params(1.0, 4, 0.15, 0.15), 20, 1)) {
    for (double x : s.returns) EXPECT_DOUBLE_EQ(std::abs(x), 0.15);
  }
}

TEST(Membership, ChecksTheBand) {
  EXPECT_NO_THROW(check_membership(ScenarioPath::from_returns(1.0, {0.1, -0.2}), 0.1, 0.2));
  EXPECT_THROW(check_membership(ScenarioPath::from_returns(1.0, {0.1, -0.21}), 0.1, 0.2),
               DomainError);
}

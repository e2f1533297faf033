#include "superhedge/lifting.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "superhedge/errors.hpp"

namespace superhedge {

namespace {

void check_horizon(int n) {
  if (n > kMaxLiftPeriods) {
    throw CapacityError("lifting enumerates 2^N binomial words; N = " + std::to_string(n) +
                        " exceeds the limit of " + std::to_string(kMaxLiftPeriods));
  }
}

}  // namespace

LiftWeights compute_weights(const ScenarioPath& path, double sigma_high) {
  if (!(sigma_high > 0.0)) throw DomainError("lift weights need sigma_high > 0");
  const double up = std::exp(sigma_high);
  const double down = std::exp(-sigma_high);
  LiftWeights w;
  w.up.reserve(path.returns.size());
  for (std::size_t n = 0; n < path.returns.size(); ++n) {
    const double x = path.returns[n];
    if (std::abs(x) > sigma_high + kReturnTolerance) {
      std::ostringstream os;
      os << "log-return " << x << " at period " << n + 1 << " exceeds sigma_high " << sigma_high;
      throw DomainError(os.str());
    }
    w.up.push_back(std::clamp((std::exp(x) - down) / (up - down), 0.0, 1.0));
  }
  return w;
}

std::vector<double> word_weights(const LiftWeights& weights, int n) {
  if (n < 0 || static_cast<std::size_t>(n) > weights.up.size()) {
    throw ValidationError("word length must lie in 0..N");
  }
  check_horizon(n);
  std::vector<double> w{1.0};
  for (int m = 0; m < n; ++m) {
    const auto um = static_cast<std::size_t>(m);
    std::vector<double> next(w.size() * 2);
    for (std::size_t id = 0; id < w.size(); ++id) {
      next[2 * id] = w[id] * weights.down(um);
      next[2 * id + 1] = w[id] * weights.up[um];
    }
    w = std::move(next);
  }
  return w;
}

double reconstructed_price(const LiftWeights& weights, double s0, double sigma_high, int n) {
  const std::vector<double> w = word_weights(weights, n);
  double total = 0.0;
  for (std::size_t id = 0; id < w.size(); ++id) {
    const int ups = std::popcount(id);
    total += w[id] * s0 * std::exp((2.0 * ups - n) * sigma_high);
  }
  return total;
}

std::vector<double> lift_strategy(const Strategy& binomial_strategy,
                                  const LatticeModel& binomial_tree, const ScenarioPath& path) {
  const int big_n = binomial_tree.periods();
  check_horizon(big_n);
  const auto& br = binomial_tree.branches();
  if (br.size() != 2 || br[0] != -br[1]) {
    throw ShapeError("lifting needs the two-branch tree with returns ±sigma_high");
  }
  if (path.returns.size() != static_cast<std::size_t>(big_n)) {
    throw ShapeError("scenario length does not match the binomial tree");
  }
  if (binomial_strategy.holdings.size() != static_cast<std::size_t>(big_n)) {
    throw ShapeError("strategy depth does not match the binomial tree");
  }
  const double sh = br[1];
  const LiftWeights weights = compute_weights(path, sh);
  std::vector<double> out(static_cast<std::size_t>(big_n));
  std::vector<double> w{1.0};
  for (int n = 0; n < big_n; ++n) {
    const auto un = static_cast<std::size_t>(n);
    double value = 0.0;
    for (std::size_t id = 0; id < w.size(); ++id) {
      value += binomial_strategy.holding(n, id) * binomial_tree.stock(n, id) * w[id];
    }
    out[un] = n == 0 ? binomial_strategy.holding(0, 0) : value / path.prices[un];
    std::vector<double> next(w.size() * 2);
    for (std::size_t id = 0; id < w.size(); ++id) {
      next[2 * id] = w[id] * weights.down(un);
      next[2 * id + 1] = w[id] * weights.up[un];
    }
    w = std::move(next);
  }
  return out;
}

double lifted_slack(const Strategy& binomial_strategy, const LatticeModel& binomial_tree,
                    const ScenarioPath& path, const CostSpec& cost, const PayoffSpec& payoff,
                    double cushion) {
  const std::vector<double> gamma = lift_strategy(binomial_strategy, binomial_tree, path);
  const int big_n = binomial_tree.periods();
  double wealth = binomial_strategy.initial_capital + cushion;
  double prev = 0.0;
  for (int n = 0; n < big_n; ++n) {
    const auto un = static_cast<std::size_t>(n);
    const double s = path.prices[un];
    CostContext ctx;
    ctx.period = n;
    ctx.horizon = big_n;
    ctx.prices = std::span<const double>(path.prices.data(), un + 1);
    wealth += gamma[un] * (path.prices[un + 1] - s) - cost(ctx, (gamma[un] - prev) * s);
    prev = gamma[un];
  }
  return wealth - payoff(path.prices);
}

ReductionReport convex_reduction_experiment(const ModelParams& params, const CostSpec& cost,
                                            const PayoffSpec& payoff, double cushion,
                                            std::size_t scenarios, std::uint64_t seed,
                                            const std::vector<int>& refinements,
                                            const HoldingGridConfig& grid) {
  params.validate();
  if (cost.path_dependent()) {
    throw PreconditionError("the reduction to the extreme two-branch tree requires a cost that "
                            "does not depend on the price history");
  }
  if (!payoff.convex_in_path()) {
    throw PreconditionError("the reduction to the extreme two-branch tree requires a payoff "
                            "that is convex in the price path");
  }
  if (!(params.sigma_high > 0.0)) throw DomainError("reduction needs sigma_high > 0");
  if (!(cushion >= 0.0)) throw ValidationError("cushion must be >= 0");
  check_horizon(params.periods);

  ModelParams bin = params;
  bin.sigma_low = params.sigma_high;
  bin.refinement = 1;
  const LatticeModel bin_tree = build_tree(bin);
  const PrimalSolution bar = solve_primal_dp(bin_tree, cost, payoff, grid);

  ReductionReport rep;
  rep.value_bar = bar.report.value;
  rep.cushion = cushion;
  rep.scenarios = scenarios;
  rep.min_slack = std::numeric_limits<double>::infinity();
  if (scenarios > 0) {
    for (const ScenarioPath& path : sample_scenarios(params, scenarios, seed)) {
      const double slack = lifted_slack(bar.strategy, bin_tree, path, cost, payoff, cushion);
      rep.min_slack = std::min(rep.min_slack, slack);
      if (slack < -1e-9) ++rep.violations;
    }
  }

  for (int k : refinements) {
    ModelParams refined = params;
    refined.refinement = k;
    const LatticeModel tree = build_tree(refined);
    const PrimalSolution sol = solve_primal_dp(tree, cost, payoff, grid);
    ReductionRow row;
    row.k = k;
    row.value_k = sol.report.value;
    row.value_bar = rep.value_bar;
    row.gap = std::abs(row.value_k - row.value_bar);
    row.grid_error = sol.report.grid_error_bound + bar.report.grid_error_bound;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace superhedge

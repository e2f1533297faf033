#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "superhedge/costs.hpp"
#include "superhedge/lattice.hpp"
#include "superhedge/lp_solver.hpp"
#include "superhedge/payoff.hpp"

namespace superhedge {

/// Holding grid of the dynamic-programming backend: `points` equally spaced
/// holdings on [−extent, extent], always containing 0.
struct HoldingGridConfig {
  std::size_t points = 100001;
  /// Half-width; when absent it is chosen from the payoff range and widened
  /// automatically whenever an optimal holding reaches the edge.
  std::optional<double> extent;
  std::size_t memory_budget_bytes = std::size_t{1} << 30;
  int max_widenings = 8;
};

/// Adapted holdings γ_n keyed by node; γ_{−1} = 0 implicitly.
struct Strategy {
  double initial_capital = 0.0;
  std::vector<std::vector<double>> holdings;  // [n][node id], n = 0..N−1

  double holding(int n, std::size_t id) const {
    return holdings[static_cast<std::size_t>(n)][id];
  }
};

/// Mark-to-market wealth Y_n on every node. Trading costs are charged at the
/// parent node, so all children of a node pay the same cost.
struct WealthLedger {
  std::vector<std::vector<double>> values;  // [n][node id], n = 0..N
  /// min over leaves of Y_N − F.
  double min_terminal_slack = 0.0;
};

struct PriceReport {
  double value = 0.0;
  std::string backend;
  /// Upper bound on value − (true tree value); zero for exact backends.
  double grid_error_bound = 0.0;
  std::size_t solver_iterations = 0;
  double holding_extent = 0.0;
  std::size_t grid_points = 0;
  std::vector<std::string> warnings;
};

struct PrimalSolution {
  PriceReport report;
  Strategy strategy;
  WealthLedger ledger;
};

/// Multipliers of the leaf constraints "terminal wealth ≥ payoff".
struct LpCertificate {
  std::vector<double> leaf_multipliers;
  lp::Status status = lp::Status::optimal;
};

struct LpPrimalSolution {
  PriceReport report;
  Strategy strategy;
  WealthLedger ledger;
  LpCertificate certificate;
};

/// Backward induction C_n(γ_prev) = min_γ { g_n((γ−γ_prev)S_n)
///   + max_child [ −γ(S_child − S_n) + C_{n+1}(child, γ) ] }, C_N = F.
///
/// Value functions are sampled on the holding grid and read between samples
/// by linear interpolation; the minimisation over γ is exact on each grid
/// cell. The result is an upper bound on the tree value and the returned
/// strategy super-replicates on every leaf. Zero cost is solved exactly.
PrimalSolution solve_primal_dp(const LatticeModel& tree, const CostSpec& cost,
                               const PayoffSpec& payoff, const HoldingGridConfig& grid = {});

/// Exact linear program for zero, proportional and piecewise-linear costs.
LpPrimalSolution solve_primal_lp(const LatticeModel& tree, const CostSpec& cost,
                                 const PayoffSpec& payoff, const lp::Options& options = {});

/// Value on the recombining two-branch tree with returns ±sigma (no strategy
/// is kept). Requires a deterministic cost and a payoff of S_N only; in that
/// case nodes with equal up-counts share their value function.
PriceReport binomial_value(double s0, int periods, double sigma, const CostSpec& cost,
                           const PayoffSpec& payoff, const HoldingGridConfig& grid = {});

/// Replays a strategy on the tree; also fills min_terminal_slack.
WealthLedger compute_ledger(const LatticeModel& tree, const Strategy& strategy,
                            const CostSpec& cost, const PayoffSpec& payoff);

struct VerificationReport {
  double min_slack = 0.0;
  std::size_t violations = 0;
  std::size_t scenarios = 0;
  std::size_t worst_scenario = 0;
};

/// Plays the tree strategy on arbitrary scenarios: holdings are read at the
/// projected node, wealth uses the scenario's own prices and costs. The
/// initial capital is raised by `cushion`. Violations count slack < −tol.
VerificationReport verify_superreplication(const Strategy& strategy, const CostSpec& cost,
                                           const PayoffSpec& payoff,
                                           std::span<const ScenarioPath> scenarios,
                                           const LatticeModel& tree, double cushion = 0.0,
                                           double tol = 1e-9);

/// Uniform bound A(1+e^{σ̂})^N / ((1−e^{−σ̂}) s0 e^{−σ̂N}) on optimal holdings
/// when the payoff is bounded by A.
double apriori_bound(const ModelParams& params, double capital_bound);

}  // namespace superhedge

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "superhedge/costs.hpp"
#include "superhedge/lattice.hpp"
#include "superhedge/payoff.hpp"
#include "superhedge/primal.hpp"

namespace superhedge {

/// Largest horizon for which binomial words are enumerated exactly.
inline constexpr int kMaxLiftPeriods = 20;

/// Per-period weights writing e^{x_n} as a mixture of e^{+σ̂} and e^{−σ̂}.
struct LiftWeights {
  std::vector<double> up;  // λ⁺_n; the down weight is 1 − λ⁺_n

  double down(std::size_t n) const { return 1.0 - up[n]; }
};

/// λ⁺_n = (e^{x_n} − e^{−σ̂}) / (e^{σ̂} − e^{−σ̂}). Throws DomainError if some
/// |x_n| exceeds σ̂ beyond kReturnTolerance.
LiftWeights compute_weights(const ScenarioPath& path, double sigma_high);

/// Product weights of all 2^n binomial words of length n. Words are indexed
/// like binomial tree nodes: bit 1 is an up-move, earliest period first.
std::vector<double> word_weights(const LiftWeights& weights, int n);

/// Σ_words S̄_n(word)·λ_n^{word}; reproduces S_n of the weighted path.
double reconstructed_price(const LiftWeights& weights, double s0, double sigma_high, int n);

/// Holdings γ_n(ω) = Σ_words (γ̄_n S̄_n)(word) λ_n^{word}(ω) / S_n(ω) for a
/// strategy on the two-branch tree with returns ±σ̂; γ_0 = γ̄_0.
std::vector<double> lift_strategy(const Strategy& binomial_strategy,
                                  const LatticeModel& binomial_tree, const ScenarioPath& path);

/// Terminal wealth minus payoff when the lifted strategy trades along `path`
/// from capital binomial_strategy.initial_capital + cushion.
double lifted_slack(const Strategy& binomial_strategy, const LatticeModel& binomial_tree,
                    const ScenarioPath& path, const CostSpec& cost, const PayoffSpec& payoff,
                    double cushion);

struct ReductionRow {
  int k = 0;
  double value_k = 0.0;
  double value_bar = 0.0;
  double gap = 0.0;
  /// Sum of the grid-error bounds of both solves.
  double grid_error = 0.0;
};

struct ReductionReport {
  double value_bar = 0.0;
  double cushion = 0.0;
  double min_slack = 0.0;
  std::size_t violations = 0;
  std::size_t scenarios = 0;
  std::vector<ReductionRow> rows;
};

/// Compares the price on the extreme two-branch tree with prices on refined
/// multinomial trees, and checks the lifted extreme-tree strategy on sampled
/// scenarios of the full band. Needs a cost that ignores the price history
/// and a payoff flagged convex.
ReductionReport convex_reduction_experiment(const ModelParams& params, const CostSpec& cost,
                                            const PayoffSpec& payoff, double cushion,
                                            std::size_t scenarios, std::uint64_t seed,
                                            const std::vector<int>& refinements = {1, 2, 4},
                                            const HoldingGridConfig& grid = {});

}  // namespace superhedge

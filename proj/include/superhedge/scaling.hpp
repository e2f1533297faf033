#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "superhedge/costs.hpp"
#include "superhedge/dual.hpp"
#include "superhedge/lattice.hpp"
#include "superhedge/payoff.hpp"
#include "superhedge/primal.hpp"

namespace superhedge {

/// σ̃(t, driver): the driver is the path prefix observed so far, values at
/// times 0, 1/N, …, (n−1)/N (a Brownian path in simulation, the martingale
/// B^N in the tree construction).
using VolFunction = std::function<double(double t, std::span<const double> driver)>;

struct VolCandidate {
  std::string id;
  VolFunction evaluator;
  /// Declared Lipschitz constant in (t, path); infinity when discontinuous.
  double lipschitz_const = std::numeric_limits<double>::infinity();
  /// Margin δ of the admissibility band and length of the constant tail.
  double delta = 0.0;
  /// σ̃ ≡ σ̲ on [1 − δ, 1].
  bool constant_tail = false;
  /// Set for constant candidates; enables exact lognormal sampling.
  std::optional<double> constant_value;

  double operator()(double t, std::span<const double> driver) const { return evaluator(t, driver); }

  static VolCandidate constant(double sigma);
  /// values[i] on [knots[i], knots[i+1]); knots start at 0 and increase.
  static VolCandidate piecewise_constant(std::vector<double> knots, std::vector<double> values);
  /// `above` once the running maximum of the driver reaches `level`, else `below`.
  static VolCandidate running_max_threshold(double level, double below, double above);
  /// base + amplitude·tanh(latest driver value); Lipschitz with constant |amplitude|.
  static VolCandidate tanh_of_driver(double base, double amplitude);
  static VolCandidate custom(std::string id, VolFunction f, double lipschitz_const);
  /// Blends `base` linearly into sigma_low over [1 − 2δ, 1 − δ] and holds
  /// sigma_low afterwards.
  static VolCandidate with_constant_tail(const VolCandidate& base, double sigma_low, double delta);
};

/// Per-node state of the sign-tree construction.
struct KusuokaNode {
  int xi = 0;             // sign of the move into this node; 0 at the root
  double sigma = 0.0;     // clamped volatility of the move into this node
  double kappa = 0.0;
  double x = 0.0;         // log-return into this node
  double b = 0.0;         // B^N
  double s = 0.0;         // S^N
  double m = 0.0;         // S^N exp(κ X)
  double q_var = 0.0;     // Q^N diagnostic
  double up_probability = 0.0;  // q of the next move; unused at leaves
  double probability = 0.0;     // measure of reaching this node
};

struct KusuokaReport {
  int periods = 0;
  double c = 0.0;
  /// Every node of the 2^N sign tree was built; otherwise nodes along
  /// `sampled_paths` paths drawn from the measure were checked.
  bool full_tree = false;
  std::size_t sampled_paths = 0;
  std::size_t nodes_checked = 0;

  double max_b_martingale_error = 0.0;
  double max_m_martingale_error = 0.0;  // relative to M
  double max_relative_gap = 0.0;        // |M − S|/S
  double relative_gap_bound = 0.0;      // c/√N
  double min_q = 1.0;
  double max_q = 0.0;
  double leaf_mass = std::numeric_limits<double>::quiet_NaN();  // full tree only
  double min_scaled_dq = std::numeric_limits<double>::infinity();
  double max_scaled_dq = -std::numeric_limits<double>::infinity();
  double dq_lower = 0.0;  // σ̲² − 2cσ̂
  double dq_upper = 0.0;  // σ̂² + 2cσ̂
  double max_terminal_gap = 0.0;  // |M_N − S_N|/S_N

  /// Full tree only: transitions over signs (branch 0 = down) and states.
  DualMeasure measure;
  std::vector<std::vector<KusuokaNode>> levels;

  /// All invariants within tolerance (1e−12 martingale, 1e−10 leaf mass).
  bool invariants_hold() const;
};

/// Builds the measure on the N-period sign tree from a volatility candidate.
///
/// `model` holds s0 and the unit-time bounds σ̲, σ̂; the per-period returns
/// are σ_n ξ_n /√N. Trees with N ≤ full_tree_limit are built completely;
/// larger ones are checked along sampled paths. Throws PreconditionError
/// ("N too small") naming the node where q leaves (0, 1), and
/// ValidationError when the candidate leaves its admissibility band.
KusuokaReport kusuoka_measure(const VolCandidate& candidate, const ModelParams& model, double c,
                              std::size_t sample_paths = 10000, std::uint64_t seed = 0,
                              int full_tree_limit = 16);

struct LimitCandidateRow {
  std::string id;
  double value = 0.0;
  double std_error = 0.0;
  double mean_penalty = 0.0;
  bool rejected = false;
  std::string reason;
};

struct LimitEstimate {
  double best_value = -std::numeric_limits<double>::infinity();
  double best_std_error = 0.0;
  std::string best_id;
  std::vector<LimitCandidateRow> rows;
  /// Always set: the family is finite, so the maximum only bounds the
  /// supremum over all admissible volatilities from below.
  std::string note = "lower estimate: maximum over a finite candidate family";
};

struct MonteCarloOptions {
  std::size_t paths = 20000;
  int steps = 256;
  std::uint64_t seed = 0;
};

/// Monte Carlo estimate of E[F(S^σ) − ∫ Ĥ_t(S^σ) a²(σ_t) dt] for each
/// candidate, with dS = σ S dW on [0, 1]. Constant candidates use exact
/// lognormal steps; the others an Euler scheme in log-price. Candidates with
/// a(σ) > c (or a(σ) > 0 under an infinite Ĥ) are rejected.
LimitEstimate limit_value_estimate(const std::vector<VolCandidate>& candidates,
                                   const PayoffSpec& payoff, const LimitCurvature& curvature,
                                   const ModelParams& model, double c,
                                   const MonteCarloOptions& mc = {});

/// Constant candidates on [σ̲, √(σ̂² + 2cσ̂)], the range where a(σ) ≤ c.
std::vector<VolCandidate> constant_family(double sigma_low, double sigma_high, double c,
                                          int count);

struct ConvergenceRow {
  int periods = 0;
  double value = 0.0;
  double grid_error = 0.0;
  std::string backend;
  double lower_bound = 0.0;
  double lower_bound_se = 0.0;
  double best_limit_estimate = 0.0;
  std::string best_candidate_id;
  bool above_lower_bound = false;  // value ≥ lower_bound − 3·se
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;

  /// Columns N,V_N,lower_bound,lower_bound_se,best_limit_estimate,best_candidate_id.
  std::string to_csv() const;
};

struct ConvergenceOptions {
  MonteCarloOptions mc;
  /// Constant volatilities on [σ̲, σ̂] used for the lower bound.
  int lower_bound_grid = 5;
  /// Candidate family for the limit estimate; constants by default.
  std::vector<VolCandidate> candidates;
  /// Ĥ of the limit; taken from the cost when absent.
  std::optional<LimitCurvature> curvature;
  HoldingGridConfig grid;
  std::size_t node_budget = kDefaultNodeBudget;
  /// Skip the Monte Carlo limit estimate (lower bound is still computed).
  bool skip_limit_estimate = false;
};

/// V_N on the model with per-period bounds σ̲/√N, σ̂/√N and costs g^{N,c}.
/// For a convex payoff and a cost that ignores the history V_N is computed
/// on the extreme two-branch tree (recombining for payoffs of S_N);
/// otherwise on the full k = 1 tree, within the node budget.
ConvergenceStudy convergence_study(const CostSpec& h, double c, const PayoffSpec& payoff,
                                   const std::vector<int>& periods, const ModelParams& model,
                                   const ConvergenceOptions& options = {});

/// V_N alone, as used by the convergence study.
PriceReport scaled_price(const CostSpec& h, double c, const PayoffSpec& payoff, int periods,
                         const ModelParams& model, const HoldingGridConfig& grid = {},
                         std::size_t node_budget = kDefaultNodeBudget);

}  // namespace superhedge

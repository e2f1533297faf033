#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "superhedge/extended_real.hpp"

namespace superhedge {

/// Where a cost is evaluated: period n of an N-period model, with the
/// discrete price history S_0..S_n observed so far.
struct CostContext {
  int period = 0;
  int horizon = 1;
  std::span<const double> prices;

  double time() const { return static_cast<double>(period) / horizon; }

  /// Piecewise-linear interpolation of the price history at t ∈ [0, n/N].
  double interpolated_price(double t) const;
};

enum class CostKind { zero, proportional, quadratic, truncated_quadratic, piecewise_linear, custom };

std::string to_string(CostKind kind);

using CostEvaluator = std::function<double(const CostContext&, double beta)>;

/// Convex trading-cost function β ↦ g_n(ω, β) with g ≥ 0 and g(0) = 0.
///
/// All kinds except `custom` have closed-form conjugates. A piecewise-linear
/// cost is given by breakpoints x_1 < … < x_m and slopes s_0 ≤ … ≤ s_m, where
/// s_i applies between x_i and x_{i+1}; it is anchored by g(0) = 0.
class CostSpec {
public:
  static CostSpec zero();
  static CostSpec proportional(double rate);
  static CostSpec quadratic(double lambda);
  /// Λβ² for |β| ≤ cap/(2Λ), continued linearly with slope ±cap.
  static CostSpec truncated_quadratic(double lambda, double cap);
  static CostSpec piecewise_linear(std::vector<double> breakpoints, std::vector<double> slopes);
  /// Linear interpolation of a convex table (β_i, g_i), extended with the end
  /// slopes. The table must contain (0, 0).
  static CostSpec tabulated(std::vector<double> beta, std::vector<double> cost);
  static CostSpec custom(CostEvaluator evaluator, bool path_dependent, std::string label = "custom");

  CostKind kind() const { return kind_; }
  bool path_dependent() const { return path_dependent_; }
  bool has_closed_form_conjugate() const { return kind_ != CostKind::custom; }
  bool is_piecewise_linear() const {
    return kind_ == CostKind::zero || kind_ == CostKind::proportional ||
           kind_ == CostKind::piecewise_linear;
  }

  double rate() const { return rate_; }
  double lambda() const { return lambda_; }
  double cap() const { return cap_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& slopes() const { return slopes_; }
  const std::string& label() const { return label_; }

  /// Piecewise-linear kinds as max_i (slope_i·β + intercept_i); max intercept is 0.
  struct AffinePiece {
    double slope;
    double intercept;
  };
  std::vector<AffinePiece> affine_pieces() const;

  double operator()(const CostContext& ctx, double beta) const;

  /// Context-free evaluation for deterministic costs.
  double operator()(double beta) const;

private:
  CostKind kind_ = CostKind::zero;
  bool path_dependent_ = false;
  double rate_ = 0.0;
  double lambda_ = 0.0;
  double cap_ = 0.0;
  std::vector<double> breakpoints_;
  std::vector<double> slopes_;
  CostEvaluator custom_;
  std::string label_ = "zero";
};

/// sup_β {αβ − g(β)} together with a maximiser.
struct ConjugatePoint {
  ExtendedReal value;
  /// Maximising β; ±HUGE_VAL when the supremum is only approached at infinity.
  double argmax = 0.0;
};

ConjugatePoint conjugate_point(const CostSpec& cost, const CostContext& ctx, double alpha);
ExtendedReal conjugate(const CostSpec& cost, const CostContext& ctx, double alpha);
ExtendedReal conjugate(const CostSpec& cost, double alpha);

/// Numerical convex conjugate of an extended-valued convex f with f(0) finite.
///
/// The search brackets the maximiser starting from [−1, 1] and doubles each
/// side up to 60 times; a side still rising after that is declared unbounded.
/// The effective domain of f is located by bisection before the search.
ConjugatePoint numeric_conjugate(const std::function<ExtendedReal(double)>& f, double x);

/// h^c: h on the interval where |h'| ≤ c, extended linearly with slope ±c.
CostSpec truncate(const CostSpec& h, double c);

/// g^{N,c}: the truncation of h at slope c/√N, read at time n/N on the
/// interpolated price path. The returned cost serves every period.
CostSpec scaled_cost(const CostSpec& h, double c, int horizon);

/// Cost of one period n of the scaled model, bound to a price history.
std::function<double(double)> scaled_cost(const CostSpec& h, double c, int horizon, int period,
                                          std::vector<double> prices);

/// Curvature Ĥ_t(w) of the limiting conjugate, H ≈ Ĥ·α² near zero.
struct LimitCurvature {
  std::function<double(double t, std::span<const double> path)> evaluator;
  /// Frictionless limit: volatilities outside [σ̲, σ̂] are excluded outright.
  bool infinite = false;

  static LimitCurvature constant(double value);
  static LimitCurvature frictionless();
  /// Ĥ implied by a cost: 1/(4Λ) for quadratics, 0 for proportional costs,
  /// infinite for zero cost, 1/(2 h''(0)) numerically for custom kinds.
  static LimitCurvature from_cost(const CostSpec& h);

  double operator()(double t, std::span<const double> path) const;
};

/// Volatility penalty rate a(σ); zero on [σ̲, σ̂].
double penalty_a(double sigma, double sigma_low, double sigma_high);

/// Convex extension b(u) with b(u) = a(√u)² for u ≥ 0.
double penalty_b(double u, double sigma_low, double sigma_high);

/// Whether b(x² + 2xy) ≤ y² + 1e−12. Requires |x| ∈ [σ̲, σ̂].
bool penalty_b_inequality_holds(double x, double y, double sigma_low, double sigma_high);

}  // namespace superhedge

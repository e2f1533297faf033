#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace superhedge::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// minimize cᵀx  subject to  row_lo ≤ A x ≤ row_hi,  col_lo ≤ x ≤ col_hi.
class LinearProgram {
public:
  std::size_t add_column(double cost, double lower = -kInf, double upper = kInf);
  std::size_t add_row(std::vector<std::pair<std::size_t, double>> entries, double lower,
                      double upper);

  std::size_t num_cols() const { return cost_.size(); }
  std::size_t num_rows() const { return row_lo_.size(); }

  const std::vector<double>& cost() const { return cost_; }
  const std::vector<double>& col_lower() const { return col_lo_; }
  const std::vector<double>& col_upper() const { return col_hi_; }
  const std::vector<double>& row_lower() const { return row_lo_; }
  const std::vector<double>& row_upper() const { return row_hi_; }
  const std::vector<std::pair<std::size_t, double>>& row(std::size_t i) const { return rows_[i]; }

  /// Largest violation of row or column bounds at x.
  double max_violation(const std::vector<double>& x) const;
  double objective(const std::vector<double>& x) const;

private:
  std::vector<double> cost_, col_lo_, col_hi_;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows_;
  std::vector<double> row_lo_, row_hi_;
};

enum class Status { optimal, infeasible, unbounded, iteration_limit };

std::string to_string(Status s);

struct Options {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-10;
  double pivot_tol = 1e-11;
  std::size_t max_iterations = 200000;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  std::size_t degenerate_switch = 50;
};

struct Solution {
  Status status = Status::iteration_limit;
  double objective = 0.0;
  std::vector<double> x;
  /// ∂objective/∂(active row bound); nonnegative on binding lower bounds.
  std::vector<double> row_duals;
  std::size_t iterations = 0;
};

/// Two-phase bounded-variable primal simplex. Pivoting is deterministic:
/// Dantzig pricing with a Bland's-rule fallback during degenerate stalls.
Solution solve(const LinearProgram& lp, const Options& options = {});

}  // namespace superhedge::lp

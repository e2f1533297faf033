#include "superhedge/lp_solver.hpp"

#include <algorithm>
#include <cmath>

#include "superhedge/errors.hpp"

namespace superhedge::lp {

std::size_t LinearProgram::add_column(double cost, double lower, double upper) {
  if (std::isnan(cost) || std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw ValidationError("lp column has invalid cost or bounds");
  }
  cost_.push_back(cost);
  col_lo_.push_back(lower);
  col_hi_.push_back(upper);
  return cost_.size() - 1;
}

std::size_t LinearProgram::add_row(std::vector<std::pair<std::size_t, double>> entries,
                                   double lower, double upper) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw ValidationError("lp row has invalid bounds");
  }
  for (const auto& [j, a] : entries) {
    if (j >= cost_.size()) throw ShapeError("lp row references an unknown column");
    if (!std::isfinite(a)) throw ValidationError("lp row coefficient is not finite");
  }
  rows_.push_back(std::move(entries));
  row_lo_.push_back(lower);
  row_hi_.push_back(upper);
  return rows_.size() - 1;
}

double LinearProgram::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < cost_.size(); ++j) {
    worst = std::max({worst, col_lo_[j] - x[j], x[j] - col_hi_[j]});
  }
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    double ax = 0.0;
    for (const auto& [j, a] : rows_[i]) ax += a * x[j];
    worst = std::max({worst, row_lo_[i] - ax, ax - row_hi_[i]});
  }
  return worst;
}

double LinearProgram::objective(const std::vector<double>& x) const {
  double v = 0.0;
  for (std::size_t j = 0; j < cost_.size(); ++j) v += cost_[j] * x[j];
  return v;
}

std::string to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

enum class At { basic, lower, upper, zero };

// Columns are laid out as [structural | row activity | artificial]. Every row
// reads  a·x − s_i + d_i·r_i = 0  with s_i bounded by the row bounds.
class Simplex {
public:
  Simplex(const LinearProgram& lp, const Options& opt) : lp_(lp), opt_(opt) {
    m_ = lp.num_rows();
    n_ = lp.num_cols();
    cols_ = n_ + 2 * m_;
    tab_.assign(m_ * cols_, 0.0);
    lo_.resize(cols_);
    hi_.resize(cols_);
    value_.assign(cols_, 0.0);
    at_.assign(cols_, At::lower);
    basis_.assign(m_, 0);
    for (std::size_t j = 0; j < n_; ++j) {
      lo_[j] = lp.col_lower()[j];
      hi_[j] = lp.col_upper()[j];
    }
    for (std::size_t i = 0; i < m_; ++i) {
      lo_[n_ + i] = lp.row_lower()[i];
      hi_[n_ + i] = lp.row_upper()[i];
      lo_[n_ + m_ + i] = 0.0;
      hi_[n_ + m_ + i] = kInf;
    }
    for (std::size_t j = 0; j < n_ + m_; ++j) park(j);
  }

  Solution run() {
    Solution sol;
    initial_basis();

    // Phase I: drive the artificials to zero.
    std::vector<double> c1(cols_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) c1[n_ + m_ + i] = 1.0;
    price(c1);
    Status st = iterate(/*allow_artificials=*/true, sol.iterations);
    double infeas = 0.0;
    for (std::size_t i = 0; i < m_; ++i) infeas += value_of(n_ + m_ + i);
    if (st == Status::iteration_limit) {
      sol.status = st;
      return sol;
    }
    if (infeas > opt_.feasibility_tol * std::max<std::size_t>(1, m_)) {
      sol.status = Status::infeasible;
      return sol;
    }
    for (std::size_t i = 0; i < m_; ++i) hi_[n_ + m_ + i] = 0.0;
    drive_out_artificials();

    // Phase II.
    std::vector<double> c2(cols_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) c2[j] = lp_.cost()[j];
    price(c2);
    st = iterate(/*allow_artificials=*/false, sol.iterations);
    sol.status = st;
    sol.x.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) sol.x[j] = value_of(j);
    sol.objective = lp_.objective(sol.x);
    // The reduced cost of the activity column −e_i equals the row multiplier.
    sol.row_duals.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) sol.row_duals[i] = rc_[n_ + i];
    return sol;
  }

private:
  double& t(std::size_t i, std::size_t j) { return tab_[i * cols_ + j]; }

  bool is_artificial(std::size_t j) const { return j >= n_ + m_; }

  // Place a nonbasic column at a finite bound, or at zero when free.
  void park(std::size_t j) {
    if (std::isfinite(lo_[j])) {
      at_[j] = At::lower;
      value_[j] = lo_[j];
    } else if (std::isfinite(hi_[j])) {
      at_[j] = At::upper;
      value_[j] = hi_[j];
    } else {
      at_[j] = At::zero;
      value_[j] = 0.0;
    }
  }

  double value_of(std::size_t j) const { return value_[j]; }

  void initial_basis() {
    for (std::size_t i = 0; i < m_; ++i) {
      double ax = 0.0;
      for (const auto& [j, a] : lp_.row(i)) {
        t(i, j) += a;
        ax += a * value_[j];
      }
      const std::size_t s = n_ + i;
      const std::size_t r = n_ + m_ + i;
      t(i, s) = -1.0;
      if (ax >= lo_[s] - opt_.feasibility_tol && ax <= hi_[s] + opt_.feasibility_tol) {
        // Activity column is basic: divide the row by its −1 pivot.
        for (std::size_t j = 0; j < cols_; ++j) t(i, j) = -t(i, j);
        basis_[i] = s;
        at_[s] = At::basic;
        value_[s] = ax;
        at_[r] = At::lower;
        value_[r] = 0.0;
      } else {
        // s_i sits at its nearest bound; r_i absorbs the residual.
        const double target = ax < lo_[s] ? lo_[s] : hi_[s];
        at_[s] = ax < lo_[s] ? At::lower : At::upper;
        value_[s] = target;
        const double resid = ax - target;  // a·x − s = resid, need d·r = −resid
        const double d = resid > 0 ? -1.0 : 1.0;
        t(i, r) = d;
        for (std::size_t j = 0; j < cols_; ++j) t(i, j) /= d;
        basis_[i] = r;
        at_[r] = At::basic;
        value_[r] = std::abs(resid);
      }
    }
  }

  void price(const std::vector<double>& c) {
    rc_ = c;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = c[basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < cols_; ++j) rc_[j] -= cb * t(i, j);
    }
  }

  void pivot(std::size_t r, std::size_t q) {
    const double p = t(r, q);
    for (std::size_t j = 0; j < cols_; ++j) t(r, j) /= p;
    t(r, q) = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = t(i, q);
      if (f == 0.0) continue;
      double* row_i = &tab_[i * cols_];
      const double* row_r = &tab_[r * cols_];
      for (std::size_t j = 0; j < cols_; ++j) row_i[j] -= f * row_r[j];
      row_i[q] = 0.0;
    }
    const double f = rc_[q];
    if (f != 0.0) {
      for (std::size_t j = 0; j < cols_; ++j) rc_[j] -= f * t(r, j);
      rc_[q] = 0.0;
    }
    basis_[r] = q;
  }

  // Entering candidate and its direction (+1 increase, −1 decrease).
  bool choose_entering(bool allow_artificials, bool bland, std::size_t& q, int& dir) const {
    double best = 0.0;
    bool found = false;
    for (std::size_t j = 0; j < cols_; ++j) {
      if (at_[j] == At::basic) continue;
      if (!allow_artificials && is_artificial(j)) continue;
      if (lo_[j] == hi_[j]) continue;
      const double d = rc_[j];
      int dj = 0;
      if (d < -opt_.optimality_tol && at_[j] != At::upper) dj = +1;
      if (d > opt_.optimality_tol && at_[j] != At::lower) dj = -1;
      if (dj == 0) continue;
      if (bland) {
        q = j;
        dir = dj;
        return true;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        q = j;
        dir = dj;
        found = true;
      }
    }
    return found;
  }

  Status iterate(bool allow_artificials, std::size_t& iterations) {
    std::size_t degenerate_run = 0;
    while (true) {
      if (iterations >= opt_.max_iterations) return Status::iteration_limit;
      const bool bland = degenerate_run >= opt_.degenerate_switch;
      std::size_t q = 0;
      int dir = 0;
      if (!choose_entering(allow_artificials, bland, q, dir)) return Status::optimal;
      ++iterations;

      // Ratio test, including the entering column's own bound flip.
      double step = hi_[q] - lo_[q];
      std::ptrdiff_t leave = -1;
      bool leave_to_upper = false;
      double best_pivot = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = dir * t(i, q);  // basic value moves by −a·step
        if (std::abs(a) <= opt_.pivot_tol) continue;
        const std::size_t b = basis_[i];
        double lim;
        bool to_upper;
        if (a > 0) {
          if (!std::isfinite(lo_[b])) continue;
          lim = std::max(0.0, (value_[b] - lo_[b]) / a);
          to_upper = false;
        } else {
          if (!std::isfinite(hi_[b])) continue;
          lim = std::max(0.0, (hi_[b] - value_[b]) / -a);
          to_upper = true;
        }
        const double tol = std::isfinite(step) ? 1e-12 * std::max(1.0, std::abs(step)) : 0.0;
        bool better = lim < step - tol;
        if (!better && leave >= 0 && std::abs(lim - step) <= tol) {
          better = bland ? b < basis_[static_cast<std::size_t>(leave)] : std::abs(a) > best_pivot;
        }
        if (better) {
          step = lim;
          leave = static_cast<std::ptrdiff_t>(i);
          leave_to_upper = to_upper;
          best_pivot = std::abs(a);
        }
      }
      if (!std::isfinite(step)) return Status::unbounded;

      degenerate_run = step <= 1e-12 ? degenerate_run + 1 : 0;
      value_[q] += dir * step;
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = t(i, q);
        if (a != 0.0) value_[basis_[i]] -= dir * step * a;
      }
      if (leave < 0) {
        at_[q] = dir > 0 ? At::upper : At::lower;
        value_[q] = dir > 0 ? hi_[q] : lo_[q];
        continue;
      }
      const std::size_t r = static_cast<std::size_t>(leave);
      const std::size_t out = basis_[r];
      at_[out] = leave_to_upper ? At::upper : At::lower;
      value_[out] = leave_to_upper ? hi_[out] : lo_[out];
      at_[q] = At::basic;
      pivot(r, q);
    }
  }

  void drive_out_artificials() {
    for (std::size_t r = 0; r < m_; ++r) {
      if (!is_artificial(basis_[r])) continue;
      std::size_t best = cols_;
      double mag = 1e-9;
      for (std::size_t j = 0; j < n_ + m_; ++j) {
        if (at_[j] == At::basic) continue;
        if (std::abs(t(r, j)) > mag) {
          mag = std::abs(t(r, j));
          best = j;
        }
      }
      if (best == cols_) continue;  // redundant row
      const std::size_t out = basis_[r];
      at_[out] = At::lower;
      value_[out] = 0.0;
      at_[best] = At::basic;
      pivot(r, best);
    }
  }

  const LinearProgram& lp_;
  Options opt_;
  std::size_t m_ = 0, n_ = 0, cols_ = 0;
  std::vector<double> tab_, lo_, hi_, value_, rc_;
  std::vector<At> at_;
  std::vector<std::size_t> basis_;
};

}  // namespace

Solution solve(const LinearProgram& lp, const Options& options) {
  Simplex s(lp, options);
  Solution sol = s.run();
  if (sol.status == Status::optimal && lp.max_violation(sol.x) > 1e-6) {
    throw InternalError("simplex returned a point violating its constraints");
  }
  return sol;
}

}  // namespace superhedge::lp

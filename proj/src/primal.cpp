#include "superhedge/primal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "superhedge/errors.hpp"

namespace superhedge {

namespace {

constexpr double kGolden = 0.6180339887498949;

struct HoldingGrid {
  std::size_t points = 0;
  std::size_t mid = 0;
  double step = 0.0;

  HoldingGrid(std::size_t requested, double extent) {
    if (requested < 3) throw ValidationError("grid.points must be >= 3");
    if (!(extent > 0.0) || !std::isfinite(extent)) {
      throw ValidationError("grid.extent must be finite and > 0");
    }
    points = requested | 1;  // odd, so that 0 is a grid point
    mid = (points - 1) / 2;
    step = extent / static_cast<double>(mid);
  }

  double at(std::size_t j) const { return (static_cast<double>(j) - static_cast<double>(mid)) * step; }
  double extent() const { return static_cast<double>(mid) * step; }

  std::size_t nearest(double x) const {
    const double r = std::round(x / step) + static_cast<double>(mid);
    return static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(points - 1)));
  }
};

struct Choice {
  double value;
  double holding;
};

// Minimisation of φ(γ) = g(S(γ − γ_prev)) + W(γ), W linear between samples.
class Convolution {
public:
  Convolution(const CostSpec& cost, const CostContext& ctx, double stock, const HoldingGrid& grid,
              std::span<const double> w)
      : cost_(cost), ctx_(ctx), stock_(stock), grid_(grid), w_(w) {}

  Choice best(double prev, std::size_t& hint) const {
    std::size_t i = std::min(hint, grid_.points - 1);
    double fi = phi(i, prev);
    while (i + 1 < grid_.points) {
      const double next = phi(i + 1, prev);
      if (next > fi) break;
      ++i;
      fi = next;
    }
    while (i > 0) {
      const double next = phi(i - 1, prev);
      if (!(next < fi)) break;
      --i;
      fi = next;
    }
    hint = i;
    Choice out{fi, grid_.at(i)};
    if (i > 0) keep_better(out, in_cell(i - 1, prev));
    if (i + 1 < grid_.points) keep_better(out, in_cell(i, prev));
    return out;
  }

private:
  static void keep_better(Choice& a, const Choice& b) {
    if (b.value < a.value) a = b;
  }

  double trade_cost(double gamma, double prev) const { return cost_(ctx_, stock_ * (gamma - prev)); }

  double phi(std::size_t i, double prev) const { return trade_cost(grid_.at(i), prev) + w_[i]; }

  Choice in_cell(std::size_t i, double prev) const {
    const double a = grid_.at(i);
    const double b = grid_.at(i + 1);
    const double slope = (w_[i + 1] - w_[i]) / grid_.step;
    auto eval = [&](double gamma) { return trade_cost(gamma, prev) + w_[i] + slope * (gamma - a); };
    Choice out{eval(a), a};
    keep_better(out, {eval(b), b});
    if (cost_.has_closed_form_conjugate()) {
      // Stationarity: S·g'(S(γ−γ_prev)) = −slope, i.e. β maximises αβ − g(β).
      const ConjugatePoint cp = conjugate_point(cost_, ctx_, -slope / stock_);
      const double gamma = std::clamp(prev + cp.argmax / stock_, a, b);
      keep_better(out, {eval(gamma), gamma});
    } else {
      double lo = a, hi = b;
      double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
      double f1 = eval(x1), f2 = eval(x2);
      while (hi - lo > 1e-12 * (1.0 + std::abs(hi))) {
        if (f1 <= f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - kGolden * (hi - lo);
          f1 = eval(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + kGolden * (hi - lo);
          f2 = eval(x2);
        }
      }
      keep_better(out, {f1, x1});
      keep_better(out, {f2, x2});
    }
    return out;
  }

  const CostSpec& cost_;
  const CostContext& ctx_;
  double stock_;
  const HoldingGrid& grid_;
  std::span<const double> w_;
};

// Worst gap between the chord of sampled convex values and the function
// itself on one cell, bounded by the secant slopes of the neighbouring cells.
double interpolation_gap(std::span<const double> w, double step) {
  const std::size_t cells = w.size() - 1;
  double worst = 0.0;
  auto secant = [&](std::size_t i) { return (w[i + 1] - w[i]) / step; };
  for (std::size_t i = 0; i < cells; ++i) {
    const double s = secant(i);
    const double a = i > 0 ? std::max(0.0, s - secant(i - 1)) : -1.0;
    const double b = i + 1 < cells ? std::max(0.0, secant(i + 1) - s) : -1.0;
    double gap;
    if (a >= 0.0 && b >= 0.0) {
      gap = a + b > 0.0 ? a * b * step / (a + b) : 0.0;
    } else {
      gap = std::max(a, b) * step;
    }
    worst = std::max(worst, gap);
  }
  return worst;
}

// min_γ max_c (v_c − γ·ΔS_c) for a convex piecewise-linear function of γ.
Choice min_of_upper_envelope(std::span<const double> dS, std::span<const double> v) {
  auto envelope = [&](double gamma) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < v.size(); ++c) m = std::max(m, v[c] - gamma * dS[c]);
    return m;
  };
  bool up = false, down = false;
  for (double d : dS) {
    up |= d > 0.0;
    down |= d < 0.0;
  }
  if (up != down) {
    throw InternalError("one-period market admits arbitrage: price moves all have one sign");
  }
  Choice best{envelope(0.0), 0.0};
  if (!up) return best;
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      if (dS[i] == dS[j]) continue;
      const double gamma = (v[i] - v[j]) / (dS[i] - dS[j]);
      const double val = envelope(gamma);
      if (val < best.value - 1e-15 * std::abs(best.value) ||
          (val <= best.value && std::abs(gamma) < std::abs(best.holding))) {
        best = {val, gamma};
      }
    }
  }
  return best;
}

CostContext context_for(int n, int horizon, std::span<const double> prices) {
  CostContext ctx;
  ctx.period = n;
  ctx.horizon = horizon;
  ctx.prices = prices;
  return ctx;
}

double initial_extent(double s0, int periods, double sigma_high, double payoff_max) {
  if (sigma_high <= 0.0) return 1.0;
  ModelParams p;
  p.s0 = s0;
  p.periods = periods;
  p.sigma_low = 0.0;
  p.sigma_high = sigma_high;
  const double capital = payoff_max + 1.0;
  // A one-period hedge needs at most capital / (smallest price move).
  const double smallest_stock = s0 * std::exp(-sigma_high * (periods - 1));
  const double one_step = 2.0 * capital /
                          (smallest_stock * (std::exp(sigma_high) - std::exp(-sigma_high)));
  return std::min(one_step, apriori_bound(p, capital));
}

std::string widening_note(double from, double to, double bound) {
  std::ostringstream os;
  os << "holding grid extent " << from << " reached by an optimal holding; widened to " << to
     << " (a-priori bound " << bound << ")";
  return os.str();
}

PrimalSolution solve_frictionless(const LatticeModel& tree, const PayoffSpec& payoff) {
  const int big_n = tree.periods();
  const std::size_t b = tree.branch_count();
  PrimalSolution sol;
  sol.strategy.holdings.resize(static_cast<std::size_t>(big_n));

  std::vector<double> next(tree.leaf_count());
  for (std::size_t id = 0; id < next.size(); ++id) {
    const auto prices = tree.path_prices(big_n, id);
    next[id] = payoff(prices);
  }
  std::vector<double> dS(b), v(b);
  for (int n = big_n - 1; n >= 0; --n) {
    std::vector<double> cur(tree.level_size(n));
    auto& holdings = sol.strategy.holdings[static_cast<std::size_t>(n)];
    holdings.resize(cur.size());
    for (std::size_t id = 0; id < cur.size(); ++id) {
      const double s = tree.stock(n, id);
      for (std::size_t c = 0; c < b; ++c) {
        dS[c] = tree.stock(n + 1, tree.child(id, c)) - s;
        v[c] = next[tree.child(id, c)];
      }
      const Choice ch = min_of_upper_envelope(dS, v);
      cur[id] = ch.value;
      holdings[id] = ch.holding;
    }
    next = std::move(cur);
  }
  sol.strategy.initial_capital = next[0];
  sol.report.value = next[0];
  sol.report.backend = "dp-exact";
  return sol;
}

// Backward pass of the grid DP over the full tree; keeps W for every
// internal node so that the forward pass can re-optimise off the grid.
class TreeDp {
public:
  TreeDp(const LatticeModel& tree, const CostSpec& cost, const PayoffSpec& payoff,
         const HoldingGrid& grid)
      : tree_(tree), cost_(cost), payoff_(payoff), grid_(grid) {
    const int big_n = tree.periods();
    stored_.resize(static_cast<std::size_t>(big_n));
    gaps_.assign(static_cast<std::size_t>(big_n), 0.0);
    for (int n = 0; n < big_n; ++n) {
      stored_[static_cast<std::size_t>(n)].resize(tree.level_size(n) * grid.points);
    }
    leaf_payoff_.resize(tree.leaf_count());
    for (std::size_t id = 0; id < leaf_payoff_.size(); ++id) {
      leaf_payoff_[id] = payoff_(tree.path_prices(big_n, id));
    }
  }

  void run() { (void)solve(0, 0, /*need_c=*/false); }

  double error_bound() const {
    double total = 0.0;
    for (double g : gaps_) total += g;
    return total + 1e-12 * static_cast<double>(gaps_.size());
  }

  Strategy forward(double& max_abs_holding) const {
    const int big_n = tree_.periods();
    Strategy st;
    st.holdings.resize(static_cast<std::size_t>(big_n));
    max_abs_holding = 0.0;
    for (int n = 0; n < big_n; ++n) {
      auto& level = st.holdings[static_cast<std::size_t>(n)];
      level.resize(tree_.level_size(n));
      for (std::size_t id = 0; id < level.size(); ++id) {
        const double prev = n == 0 ? 0.0 : st.holding(n - 1, tree_.parent(id));
        const auto prices = tree_.path_prices(n, id);
        const CostContext ctx = context_for(n, big_n, prices);
        Convolution conv(cost_, ctx, tree_.stock(n, id), grid_, w_of(n, id));
        std::size_t hint = grid_.nearest(prev);
        const Choice ch = conv.best(prev, hint);
        level[id] = ch.holding;
        if (n == 0) st.initial_capital = ch.value;
        max_abs_holding = std::max(max_abs_holding, std::abs(ch.holding));
      }
    }
    return st;
  }

private:
  std::span<const double> w_of(int n, std::size_t id) const {
    const auto& level = stored_[static_cast<std::size_t>(n)];
    return {level.data() + id * grid_.points, grid_.points};
  }

  std::vector<double> solve(int n, std::size_t id, bool need_c) {
    const int big_n = tree_.periods();
    const double s = tree_.stock(n, id);
    auto& level = stored_[static_cast<std::size_t>(n)];
    double* w = level.data() + id * grid_.points;
    std::fill(w, w + grid_.points, -std::numeric_limits<double>::infinity());
    for (std::size_t c = 0; c < tree_.branch_count(); ++c) {
      const std::size_t child = tree_.child(id, c);
      const double ds = tree_.stock(n + 1, child) - s;
      if (n + 1 == big_n) {
        const double f = leaf_payoff_[child];
        for (std::size_t j = 0; j < grid_.points; ++j) w[j] = std::max(w[j], f - grid_.at(j) * ds);
      } else {
        const std::vector<double> cc = solve(n + 1, child, true);
        for (std::size_t j = 0; j < grid_.points; ++j) {
          w[j] = std::max(w[j], cc[j] - grid_.at(j) * ds);
        }
      }
    }
    const std::span<const double> wspan(w, grid_.points);
    auto& gap = gaps_[static_cast<std::size_t>(n)];
    gap = std::max(gap, interpolation_gap(wspan, grid_.step));
    if (!need_c) return {};

    const auto prices = tree_.path_prices(n, id);
    const CostContext ctx = context_for(n, big_n, prices);
    Convolution conv(cost_, ctx, s, grid_, wspan);
    std::vector<double> c(grid_.points);
    std::size_t hint = 0;
    for (std::size_t j = 0; j < grid_.points; ++j) c[j] = conv.best(grid_.at(j), hint).value;
    return c;
  }

  const LatticeModel& tree_;
  const CostSpec& cost_;
  const PayoffSpec& payoff_;
  const HoldingGrid& grid_;
  std::vector<std::vector<double>> stored_;
  std::vector<double> gaps_;
  std::vector<double> leaf_payoff_;
};

}  // namespace

double apriori_bound(const ModelParams& params, double capital_bound) {
  params.validate();
  if (!(capital_bound > 0.0)) throw ValidationError("capital bound A must be > 0");
  const double sh = params.sigma_high;
  if (sh == 0.0) throw DomainError("degenerate model: sigma_high = 0 gives no holding bound");
  const double n = params.periods;
  return capital_bound * std::pow(1.0 + std::exp(sh), n) /
         ((1.0 - std::exp(-sh)) * params.s0 * std::exp(-sh * n));
}

PrimalSolution solve_primal_dp(const LatticeModel& tree, const CostSpec& cost,
                               const PayoffSpec& payoff, const HoldingGridConfig& config) {
  PrimalSolution sol;
  if (cost.kind() == CostKind::zero) {
    sol = solve_frictionless(tree, payoff);
  } else {
    const auto& p = tree.params();
    double payoff_max = 0.0;
    for (std::size_t id = 0; id < tree.leaf_count(); ++id) {
      payoff_max = std::max(payoff_max, std::abs(payoff(tree.path_prices(p.periods, id))));
    }
    const double bound =
        p.sigma_high > 0.0 ? apriori_bound(p, payoff_max + 1.0) : std::numeric_limits<double>::infinity();

    std::size_t points = config.points;
    const double internal = static_cast<double>(tree.internal_node_count());
    const double bytes = internal * static_cast<double>(points | 1) * sizeof(double);
    if (bytes > static_cast<double>(config.memory_budget_bytes)) {
      const auto fit = static_cast<std::size_t>(static_cast<double>(config.memory_budget_bytes) /
                                                (internal * sizeof(double)));
      if (fit < 1001) {
        throw CapacityError("holding grid of " + std::to_string(points) + " points on " +
                            std::to_string(tree.internal_node_count()) +
                            " internal nodes exceeds the memory budget");
      }
      sol.report.warnings.push_back("holding grid reduced from " + std::to_string(points) +
                                    " to " + std::to_string(fit) + " points to fit the memory budget");
      points = fit;
    }

    double extent = config.extent.value_or(
        initial_extent(p.s0, p.periods, p.sigma_high, payoff_max));
    for (int attempt = 0;; ++attempt) {
      const HoldingGrid grid(points, extent);
      TreeDp dp(tree, cost, payoff, grid);
      dp.run();
      double max_hold = 0.0;
      Strategy st = dp.forward(max_hold);
      const bool at_edge = max_hold >= grid.extent() - grid.step;
      if (at_edge && attempt < config.max_widenings) {
        sol.report.warnings.push_back(widening_note(grid.extent(), 2.0 * grid.extent(), bound));
        extent = 2.0 * grid.extent();
        continue;
      }
      if (at_edge) {
        sol.report.warnings.push_back("optimal holding still at the grid edge after " +
                                      std::to_string(config.max_widenings) + " widenings");
      }
      sol.strategy = std::move(st);
      sol.report.value = sol.strategy.initial_capital;
      sol.report.backend = "dp-grid";
      sol.report.grid_error_bound = dp.error_bound();
      sol.report.holding_extent = grid.extent();
      sol.report.grid_points = grid.points;
      break;
    }
  }
  sol.ledger = compute_ledger(tree, sol.strategy, cost, payoff);
  if (sol.ledger.min_terminal_slack < -1e-9) {
    std::ostringstream os;
    os << "dynamic-programming strategy misses the payoff by " << -sol.ledger.min_terminal_slack;
    throw ContractViolation(os.str());
  }
  return sol;
}

PriceReport binomial_value(double s0, int periods, double sigma, const CostSpec& cost,
                           const PayoffSpec& payoff, const HoldingGridConfig& config) {
  ModelParams p;
  p.s0 = s0;
  p.periods = periods;
  p.sigma_low = sigma;
  p.sigma_high = sigma;
  p.validate();
  if (cost.path_dependent()) {
    throw PreconditionError("recombining evaluation needs a cost that ignores the price history");
  }
  if (!payoff.terminal_only()) {
    throw PreconditionError("recombining evaluation needs a payoff of the terminal price only");
  }
  auto stock = [&](int n, int ups) { return s0 * std::exp((2.0 * ups - n) * sigma); };

  PriceReport report;
  std::vector<double> leaf(static_cast<std::size_t>(periods) + 1);
  double payoff_max = 0.0;
  for (int u = 0; u <= periods; ++u) {
    leaf[static_cast<std::size_t>(u)] = payoff.terminal(stock(periods, u));
    payoff_max = std::max(payoff_max, std::abs(leaf[static_cast<std::size_t>(u)]));
  }

  if (cost.kind() == CostKind::zero) {
    std::vector<double> next = leaf;
    for (int n = periods - 1; n >= 0; --n) {
      std::vector<double> cur(static_cast<std::size_t>(n) + 1);
      for (int u = 0; u <= n; ++u) {
        const double s = stock(n, u);
        const double dS[2] = {stock(n + 1, u) - s, stock(n + 1, u + 1) - s};
        const double v[2] = {next[static_cast<std::size_t>(u)], next[static_cast<std::size_t>(u) + 1]};
        cur[static_cast<std::size_t>(u)] = min_of_upper_envelope(dS, v).value;
      }
      next = std::move(cur);
    }
    report.value = next[0];
    report.backend = "binomial-exact";
    return report;
  }

  const double bound = sigma > 0.0 ? apriori_bound(p, payoff_max + 1.0)
                                   : std::numeric_limits<double>::infinity();
  double extent = config.extent.value_or(initial_extent(s0, periods, sigma, payoff_max));
  for (int attempt = 0;; ++attempt) {
    const HoldingGrid grid(config.points, extent);
    const double half = 0.5 * grid.extent();
    std::vector<std::vector<double>> next;  // C arrays at level n+1
    double gap_total = 0.0;
    double root_holding = 0.0;
    double max_hold = 0.0;
    std::vector<double> w(grid.points);
    for (int n = periods - 1; n >= 0; --n) {
      std::vector<std::vector<double>> cur(static_cast<std::size_t>(n) + 1);
      double gap = 0.0;
      for (int u = 0; u <= n; ++u) {
        const double s = stock(n, u);
        std::fill(w.begin(), w.end(), -std::numeric_limits<double>::infinity());
        for (int up = 0; up <= 1; ++up) {
          const double ds = stock(n + 1, u + up) - s;
          const auto idx = static_cast<std::size_t>(u + up);
          for (std::size_t j = 0; j < grid.points; ++j) {
            const double cont = n + 1 == periods ? leaf[idx] : next[idx][j];
            w[j] = std::max(w[j], cont - grid.at(j) * ds);
          }
        }
        gap = std::max(gap, interpolation_gap(w, grid.step));
        const double single[1] = {s};
        const CostContext ctx = context_for(n, periods, single);
        Convolution conv(cost, ctx, s, grid, w);
        auto& c = cur[static_cast<std::size_t>(u)];
        if (n == 0) {
          std::size_t hint = grid.mid;
          const Choice ch = conv.best(0.0, hint);
          c.assign(1, ch.value);
          root_holding = ch.holding;
        } else {
          c.resize(grid.points);
          std::size_t hint = 0;
          for (std::size_t j = 0; j < grid.points; ++j) {
            const Choice ch = conv.best(grid.at(j), hint);
            c[j] = ch.value;
            // Starting inside the central half, the optimum must stay there;
            // otherwise the grid may be clipping the optimal trajectory.
            if (std::abs(grid.at(j)) <= half && std::abs(ch.holding) > half) {
              max_hold = grid.extent();
            }
          }
        }
      }
      gap_total += gap;
      next = std::move(cur);
    }
    if (std::abs(root_holding) > half) max_hold = grid.extent();
    const bool at_edge = max_hold >= grid.extent() - grid.step;
    if (at_edge && attempt < config.max_widenings && !config.extent) {
      report.warnings.push_back(widening_note(grid.extent(), 2.0 * grid.extent(), bound));
      extent = 2.0 * grid.extent();
      continue;
    }
    report.value = next[0][0];
    report.backend = "binomial-grid";
    report.grid_error_bound = gap_total + 1e-12 * periods;
    report.holding_extent = grid.extent();
    report.grid_points = grid.points;
    return report;
  }
}

WealthLedger compute_ledger(const LatticeModel& tree, const Strategy& strategy,
                            const CostSpec& cost, const PayoffSpec& payoff) {
  const int big_n = tree.periods();
  if (strategy.holdings.size() != static_cast<std::size_t>(big_n)) {
    throw ShapeError("strategy depth does not match the tree");
  }
  for (int n = 0; n < big_n; ++n) {
    if (strategy.holdings[static_cast<std::size_t>(n)].size() != tree.level_size(n)) {
      throw ShapeError("strategy level " + std::to_string(n) + " has the wrong node count");
    }
  }
  WealthLedger ledger;
  ledger.values.resize(static_cast<std::size_t>(big_n) + 1);
  ledger.values[0] = {strategy.initial_capital};
  for (int n = 0; n < big_n; ++n) {
    const auto& cur = ledger.values[static_cast<std::size_t>(n)];
    auto& nxt = ledger.values[static_cast<std::size_t>(n) + 1];
    nxt.resize(tree.level_size(n + 1));
    for (std::size_t id = 0; id < cur.size(); ++id) {
      const double s = tree.stock(n, id);
      const double gamma = strategy.holding(n, id);
      const double prev = n == 0 ? 0.0 : strategy.holding(n - 1, tree.parent(id));
      const auto prices = tree.path_prices(n, id);
      const double charge = cost(context_for(n, big_n, prices), (gamma - prev) * s);
      for (std::size_t c = 0; c < tree.branch_count(); ++c) {
        const std::size_t child = tree.child(id, c);
        nxt[child] = cur[id] + gamma * (tree.stock(n + 1, child) - s) - charge;
      }
    }
  }
  ledger.min_terminal_slack = std::numeric_limits<double>::infinity();
  const auto& leaves = ledger.values.back();
  for (std::size_t id = 0; id < leaves.size(); ++id) {
    const double slack = leaves[id] - payoff(tree.path_prices(big_n, id));
    ledger.min_terminal_slack = std::min(ledger.min_terminal_slack, slack);
  }
  return ledger;
}

LpPrimalSolution solve_primal_lp(const LatticeModel& tree, const CostSpec& cost,
                                 const PayoffSpec& payoff, const lp::Options& options) {
  if (!cost.is_piecewise_linear()) {
    throw PreconditionError("the linear-programming backend needs a zero, proportional or "
                            "piecewise-linear cost");
  }
  const int big_n = tree.periods();
  const auto pieces = cost.affine_pieces();
  const double rows = static_cast<double>(tree.leaf_count()) +
                      static_cast<double>(tree.internal_node_count() * pieces.size());
  const double cols = 1.0 + 2.0 * static_cast<double>(tree.internal_node_count());
  if (rows * (cols + 2.0 * rows) * sizeof(double) > 4e9) {
    throw CapacityError("linear program with " + std::to_string(static_cast<long long>(rows)) +
                        " rows is too large for the dense simplex");
  }

  lp::LinearProgram prog;
  const std::size_t y = prog.add_column(1.0);
  std::vector<std::vector<std::size_t>> gamma_col(static_cast<std::size_t>(big_n));
  std::vector<std::vector<std::size_t>> cost_col(static_cast<std::size_t>(big_n));
  for (int n = 0; n < big_n; ++n) {
    for (std::size_t id = 0; id < tree.level_size(n); ++id) {
      gamma_col[static_cast<std::size_t>(n)].push_back(prog.add_column(0.0));
      cost_col[static_cast<std::size_t>(n)].push_back(prog.add_column(0.0));
    }
  }
  // Epigraph rows: t ≥ slope·S·(γ − γ_parent) + intercept for every piece.
  for (int n = 0; n < big_n; ++n) {
    for (std::size_t id = 0; id < tree.level_size(n); ++id) {
      const double s = tree.stock(n, id);
      const std::size_t t = cost_col[static_cast<std::size_t>(n)][id];
      const std::size_t g = gamma_col[static_cast<std::size_t>(n)][id];
      for (const auto& piece : pieces) {
        std::vector<std::pair<std::size_t, double>> row{{t, 1.0}};
        if (piece.slope != 0.0) {
          row.emplace_back(g, -piece.slope * s);
          if (n > 0) {
            row.emplace_back(gamma_col[static_cast<std::size_t>(n - 1)][tree.parent(id)],
                             piece.slope * s);
          }
        }
        prog.add_row(std::move(row), piece.intercept, lp::kInf);
      }
    }
  }
  // Leaf rows: y + Σ γ_m ΔS_m − Σ t_m ≥ F.
  const std::size_t first_leaf_row = prog.num_rows();
  for (std::size_t leaf = 0; leaf < tree.leaf_count(); ++leaf) {
    std::vector<std::pair<std::size_t, double>> row{{y, 1.0}};
    std::size_t id = leaf;
    for (int n = big_n - 1; n >= 0; --n) {
      const std::size_t parent = tree.parent(id);
      const double ds = tree.stock(n + 1, id) - tree.stock(n, parent);
      row.emplace_back(gamma_col[static_cast<std::size_t>(n)][parent], ds);
      row.emplace_back(cost_col[static_cast<std::size_t>(n)][parent], -1.0);
      id = parent;
    }
    prog.add_row(std::move(row), payoff(tree.path_prices(big_n, leaf)), lp::kInf);
  }

  const lp::Solution res = lp::solve(prog, options);
  if (res.status != lp::Status::optimal) {
    throw InternalError("super-replication linear program ended with status " +
                        lp::to_string(res.status));
  }

  LpPrimalSolution sol;
  sol.strategy.initial_capital = res.x[y];
  sol.strategy.holdings.resize(static_cast<std::size_t>(big_n));
  for (int n = 0; n < big_n; ++n) {
    for (std::size_t col : gamma_col[static_cast<std::size_t>(n)]) {
      sol.strategy.holdings[static_cast<std::size_t>(n)].push_back(res.x[col]);
    }
  }
  sol.report.value = res.x[y];
  sol.report.backend = "lp";
  sol.report.solver_iterations = res.iterations;
  sol.certificate.status = res.status;
  sol.certificate.leaf_multipliers.assign(res.row_duals.begin() + static_cast<std::ptrdiff_t>(first_leaf_row),
                                          res.row_duals.end());
  sol.ledger = compute_ledger(tree, sol.strategy, cost, payoff);
  return sol;
}

VerificationReport verify_superreplication(const Strategy& strategy, const CostSpec& cost,
                                           const PayoffSpec& payoff,
                                           std::span<const ScenarioPath> scenarios,
                                           const LatticeModel& tree, double cushion, double tol) {
  const int big_n = tree.periods();
  if (strategy.holdings.size() != static_cast<std::size_t>(big_n)) {
    throw ShapeError("strategy depth does not match the tree");
  }
  VerificationReport rep;
  rep.scenarios = scenarios.size();
  rep.min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < scenarios.size(); ++k) {
    const ScenarioPath& path = scenarios[k];
    if (path.returns.size() != static_cast<std::size_t>(big_n) ||
        path.prices.size() != path.returns.size() + 1) {
      throw ShapeError("scenario length does not match the tree depth");
    }
    const ScenarioPath projected = project_scenario(path, tree);
    double wealth = strategy.initial_capital + cushion;
    double prev = 0.0;
    for (int n = 0; n < big_n; ++n) {
      const std::size_t id = tree.node_on_path(projected.returns, n);
      const double gamma = strategy.holding(n, id);
      const auto un = static_cast<std::size_t>(n);
      const double s = path.prices[un];
      const std::span<const double> history(path.prices.data(), un + 1);
      wealth += gamma * (path.prices[un + 1] - s) -
                cost(context_for(n, big_n, history), (gamma - prev) * s);
      prev = gamma;
    }
    const double slack = wealth - payoff(path.prices);
    if (slack < rep.min_slack) {
      rep.min_slack = slack;
      rep.worst_scenario = k;
    }
    if (slack < -tol) ++rep.violations;
  }
  return rep;
}

}  // namespace superhedge

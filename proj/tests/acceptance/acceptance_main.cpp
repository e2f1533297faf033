// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "superhedge/black_scholes.hpp"
#include "superhedge/costs.hpp"
#include "superhedge/dual.hpp"
#include "superhedge/errors.hpp"
#include "superhedge/lifting.hpp"
#include "superhedge/primal.hpp"
#include "superhedge/scaling.hpp"

using namespace superhedge;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

ModelParams model(int n, double lo, double hi, int k = 1) {
  ModelParams p;
  p.s0 = 1.0;
  p.periods = n;
  p.sigma_low = lo;
  p.sigma_high = hi;
  p.refinement = k;
  return p;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Outcome strong_duality() {
  double worst = 0.0;
  int cases = 0;
  const std::vector<PayoffSpec> payoffs{PayoffSpec::call(1.0), PayoffSpec::put(1.0),
                                        PayoffSpec::lookback_max()};
  for (int n = 1; n <= 3; ++n) {
    for (int k = 1; k <= 2; ++k) {
      const LatticeModel tree = build_tree(model(n, 0.1, 0.2, k));
      for (double rate : {0.05, 0.1, 0.5}) {
        const CostSpec g = CostSpec::proportional(rate);
        for (const PayoffSpec& f : payoffs) {
          const LpPrimalSolution lp = solve_primal_lp(tree, g, f);
          const ExtractedDual d = extract_dual_from_lp(lp.certificate, tree);
          const ExtendedReal u = evaluate_dual(d.measure, tree, g, f);
          const double gap = u.is_finite() ? std::abs(lp.report.value - u.value()) : HUGE_VAL;
          worst = std::max(worst, gap);
          ++cases;
        }
      }
    }
  }
  return {worst <= 1e-7, fmt("%.0f cases, max |V_lp - U| = %.3g", cases, worst)};
}

Outcome weak_duality() {
  std::mt19937_64 eng(2024);
  std::uniform_int_distribution<int> pick(0, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t pairs = 0, violations = 0;
  double worst = -HUGE_VAL;
  while (pairs < 1000) {
    const int n = 1 + pick(eng) % 2;
    const int k = 1 + pick(eng) % 2;
    const double lo = 0.05 + 0.1 * unit(eng);
    const double hi = lo + 0.02 + 0.2 * unit(eng);
    const LatticeModel tree = build_tree(model(n, lo, hi, k));
    CostSpec g = CostSpec::zero();
    switch (pick(eng)) {
      case 0: g = CostSpec::proportional(0.01 + 0.3 * unit(eng)); break;
      case 1: g = CostSpec::quadratic(0.2 + 2.0 * unit(eng)); break;
      default: g = CostSpec::truncated_quadratic(0.2 + 2.0 * unit(eng), 0.3 + unit(eng)); break;
    }
    PayoffSpec f = PayoffSpec::call(0.8 + 0.4 * unit(eng));
    switch (pick(eng)) {
      case 0: f = PayoffSpec::put(0.8 + 0.4 * unit(eng)); break;
      case 1: f = PayoffSpec::lookback_max(); break;
      default: break;
    }
    const PrimalSolution s = solve_primal_dp(tree, g, f);
    for (int i = 0; i < 50 && pairs < 1000; ++i, ++pairs) {
      std::vector<double> leaf(tree.leaf_count());
      double tot = 0.0;
      for (double& p : leaf) tot += (p = -std::log(1.0 - unit(eng)));
      // Occasionally concentrate mass near the extremes.
      if (i % 5 == 0) leaf[static_cast<std::size_t>(i) % leaf.size()] += 10.0 * tot;
      const DualMeasure m = DualMeasure::from_leaf_probabilities(tree, leaf);
      const ExtendedReal u = evaluate_dual(m, tree, g, f);
      if (!u.is_finite()) continue;
      const double excess = u.value() - s.report.value;
      worst = std::max(worst, excess);
      if (excess > 1e-8) ++violations;
    }
  }
  std::ostringstream os;
  os << pairs << " pairs, " << violations << " violations, max U - V = " << worst;
  return {violations == 0, os.str()};
}

Outcome closed_forms() {
  const double l2 = std::log(2.0);
  const LatticeModel tree = build_tree(model(1, l2, l2));
  const double fr = solve_primal_lp(tree, CostSpec::zero(), PayoffSpec::call(1.0)).report.value;
  const double pr =
      solve_primal_lp(tree, CostSpec::proportional(0.1), PayoffSpec::call(1.0)).report.value;
  const bool ok = std::abs(fr - 1.0 / 3.0) <= 1e-8 && std::abs(pr - 0.4) <= 1e-8;
  return {ok, fmt("frictionless V = %.12f, proportional 0.1 V = %.12f", fr, pr)};
}

Outcome convex_reduction() {
  bool ok = true;
  double worst_gap = 0.0, worst_slack = HUGE_VAL;
  std::size_t violations = 0;
  for (double lambda : {0.5, 1.0}) {
    for (double strike : {0.8, 1.0, 1.2}) {
      for (int n : {2, 3}) {
        const ReductionReport r = convex_reduction_experiment(
            model(n, 0.1, 0.2), CostSpec::quadratic(lambda), PayoffSpec::call(strike), 1e-6, 10000,
            static_cast<std::uint64_t>(n * 100 + strike * 10 + lambda), {4});
        for (const ReductionRow& row : r.rows) {
          ok = ok && row.gap <= 1e-4 + row.grid_error;
          worst_gap = std::max(worst_gap, row.gap - row.grid_error);
        }
        ok = ok && r.min_slack >= -1e-9;
        worst_slack = std::min(worst_slack, r.min_slack);
        violations += r.violations;
      }
    }
  }
  return {ok, fmt("max gap beyond grid error = %.3g, min lifted slack = %.3g, violations = %.0f",
                  worst_gap, worst_slack, static_cast<double>(violations))};
}

Outcome lifting_identities() {
  std::mt19937_64 eng(77);
  std::uniform_real_distribution<double> mag(0.1, 0.25);
  std::bernoulli_distribution sign(0.5);
  const double sh = 0.25;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int big_n = 1 + i % 12;
    std::vector<double> r;
    for (int j = 0; j < big_n; ++j) r.push_back(sign(eng) ? mag(eng) : -mag(eng));
    const ScenarioPath p = ScenarioPath::from_returns(1.0, r);
    const LiftWeights w = compute_weights(p, sh);
    const std::vector<double> full = word_weights(w, big_n);
    for (int n = 0; n <= big_n; ++n) {
      const auto un = static_cast<std::size_t>(n);
      worst = std::max(worst, std::abs(w.up.size() > un ? w.up[un] * std::exp(sh) +
                                                              w.down(un) * std::exp(-sh) -
                                                              std::exp(r[un])
                                                        : 0.0));
      const std::vector<double> part = word_weights(w, n);
      double sum = 0.0, price = 0.0;
      for (std::size_t id = 0; id < part.size(); ++id) {
        sum += part[id];
        price += part[id] * std::exp((2.0 * std::popcount(id) - n) * sh);
      }
      worst = std::max(worst, std::abs(sum - 1.0));
      worst = std::max(worst, std::abs(price / p.prices[un] - 1.0));
      worst = std::max(worst, std::abs(reconstructed_price(w, 1.0, sh, n) / p.prices[un] - 1.0));
      const std::size_t tail = std::size_t{1} << (big_n - n);
      for (std::size_t id = 0; id < part.size(); ++id) {
        double ext = 0.0;
        for (std::size_t s = 0; s < tail; ++s) ext += full[id * tail + s];
        worst = std::max(worst, std::abs(ext - part[id]));
      }
    }
  }
  return {worst <= 1e-12, fmt("max identity error = %.3g", worst)};
}

Outcome kusuoka_invariants() {
  const std::vector<VolCandidate> cands{
      VolCandidate::constant(0.1), VolCandidate::constant(0.2),
      VolCandidate::with_constant_tail(VolCandidate::tanh_of_driver(0.25, 0.1), 0.1, 0.01)};
  bool ok = true;
  std::ostringstream os;
  double mart = 0.0, gap_ratio = 0.0;
  for (int n : {16, 64}) {
    for (const VolCandidate& c : cands) {
      const KusuokaReport r = kusuoka_measure(c, model(n, 0.1, 0.2), 0.5, 10000, 11);
      ok = ok && r.invariants_hold();
      mart = std::max({mart, r.max_b_martingale_error, r.max_m_martingale_error});
      gap_ratio = std::max(gap_ratio, r.max_relative_gap / r.relative_gap_bound);
      if (!r.invariants_hold()) os << "failed: " << c.id << " N=" << n << "; ";
    }
  }
  os << "max martingale error = " << mart << ", max |M-S|/S relative to c/sqrt(N) = " << gap_ratio;
  return {ok, os.str()};
}

Outcome scaling_sandwich() {
  const ModelParams m = model(1, 0.1, 0.2);
  const double bs = black_scholes_call(1.0, 1.0, 0.2);
  ConvergenceOptions opt;
  opt.mc.seed = 31;
  const ConvergenceStudy q =
      convergence_study(CostSpec::quadratic(1.0), 2.0, PayoffSpec::call(1.0), {4, 8, 16}, m, opt);
  bool ok = true;
  std::ostringstream os;
  for (const ConvergenceRow& r : q.rows) {
    ok = ok && r.above_lower_bound && r.value >= bs - 3.0 * r.lower_bound_se;
    os << "V_" << r.periods << " = " << r.value << " ";
  }
  os << "vs BS = " << bs << "; limit estimate " << q.rows.back().best_limit_estimate
     << "; frictionless |V_N - BS|:";
  double prev = HUGE_VAL;
  for (int n : {4, 16, 64}) {
    const double d = std::abs(scaled_price(CostSpec::zero(), 2.0, PayoffSpec::call(1.0), n, m).value - bs);
    ok = ok && d < prev;
    prev = d;
    os << " " << d;
  }
  return {ok, os.str()};
}

Outcome penalty_inequality() {
  std::mt19937_64 eng(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t violations = 0;
  for (int i = 0; i < 100000; ++i) {
    const double lo = 0.01 + unit(eng);
    const double hi = lo + 2.0 * unit(eng);
    const double x = (unit(eng) < 0.5 ? -1.0 : 1.0) * (lo + (hi - lo) * unit(eng));
    const double y = (unit(eng) - 0.5) * 4.0 * hi;
    if (!penalty_b_inequality_holds(x, y, lo, hi)) ++violations;
  }
  return {violations == 0, fmt("100000 draws, %.0f violations", static_cast<double>(violations))};
}

Outcome conjugate_toolkit() {
  const std::vector<CostSpec> closed{
      CostSpec::proportional(0.3), CostSpec::quadratic(0.8), CostSpec::truncated_quadratic(0.5, 1.0),
      CostSpec::piecewise_linear({-0.5, 0.0, 1.0}, {-2.0, -0.4, 0.3, 1.5})};
  const CostSpec custom =
      CostSpec::custom([](const CostContext&, double b) { return std::cosh(b) - 1.0; }, false, "cosh");
  double closed_err = 0.0, custom_err = 0.0;
  for (const CostSpec& g : closed) {
    const auto big_g = [&](double a) { return conjugate(g, a); };
    for (double b = -3.0; b <= 3.0; b += 0.25) {
      const ConjugatePoint back = numeric_conjugate(big_g, b);
      closed_err = std::max(closed_err, back.value.is_finite() ? std::abs(back.value.value() - g(b)) : HUGE_VAL);
    }
  }
  const auto big_c = [&](double a) { return conjugate(custom, a); };
  for (double b = -2.0; b <= 2.0; b += 0.25) {
    const ConjugatePoint back = numeric_conjugate(big_c, b);
    custom_err = std::max(custom_err, back.value.is_finite() ? std::abs(back.value.value() - custom(b)) : HUGE_VAL);
  }

  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> ua(-2.0, 2.0), ub(-10.0, 10.0);
  std::vector<CostSpec> all = closed;
  all.push_back(custom);
  std::size_t fy_violations = 0;
  for (int i = 0; i < 10000; ++i) {
    const CostSpec& g = all[static_cast<std::size_t>(i) % all.size()];
    const double a = ua(eng), b = ub(eng);
    const ExtendedReal gc = conjugate(g, a);
    if (gc.is_finite() && a * b > g(b) + gc.value() + 1e-9) ++fy_violations;
  }

  std::size_t mono_violations = 0;
  for (const CostSpec& h : {CostSpec::quadratic(0.7), custom,
                            CostSpec::piecewise_linear({0.0, 1.0}, {-3.0, 0.5, 4.0})}) {
    for (double c1 : {0.2, 0.7, 1.5}) {
      const CostSpec lo = truncate(h, c1), hi = truncate(h, 2.0 * c1);
      for (double x = -6.0; x <= 6.0; x += 0.05) {
        if (lo(x) > hi(x) + 1e-12 || hi(x) > h(x) + 1e-12) ++mono_violations;
      }
    }
  }
  const bool ok = closed_err <= 1e-6 && custom_err <= 1e-4 && fy_violations == 0 && mono_violations == 0;
  std::ostringstream os;
  os << "biconjugate error closed " << closed_err << ", custom " << custom_err
     << "; Fenchel-Young violations " << fy_violations << " / 10000; truncation order violations "
     << mono_violations;
  return {ok, os.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 strong duality on small trees", strong_duality},
      {"2 weak duality fuzzing", weak_duality},
      {"3 one-period closed forms", closed_forms},
      {"4 convex reduction with quadratic cost", convex_reduction},
      {"5 lifting identities", lifting_identities},
      {"6 sign-tree measure invariants", kusuoka_invariants},
      {"7 scaling sandwich", scaling_sandwich},
      {"8 penalty inequality fuzzing", penalty_inequality},
      {"9 conjugate toolkit", conjugate_toolkit},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  %s  (%.1f s)  %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures;
}

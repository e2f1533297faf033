#include "superhedge/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "superhedge/black_scholes.hpp"
#include "superhedge/errors.hpp"
#include "superhedge/rng.hpp"

namespace superhedge {

namespace {

std::string format_sigma(double s) {
  std::ostringstream os;
  os.precision(6);
  os << s;
  return os.str();
}

void require_positive_floor(const ModelParams& model) {
  model.validate();
  if (!(model.sigma_low > 0.0)) {
    throw DomainError("the scaling limit requires sigma_low > 0");
  }
}

// Standard normals by Box–Muller, two per pair of uniforms.
class NormalSource {
public:
  explicit NormalSource(std::mt19937_64 eng) : eng_(std::move(eng)) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01(eng_);
    const double u2 = uniform01(eng_);
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct Transition {
  double sigma, kappa, q;
  KusuokaNode down, up;
};

class SignTree {
public:
  SignTree(const VolCandidate& cand, const ModelParams& model, double c)
      : cand_(cand), model_(model), c_(c), n_(model.periods), root_n_(std::sqrt(model.periods)) {
    const double sl = model.sigma_low, sh = model.sigma_high;
    band_lo_ = sl * std::max(sl - 2.0 * c, 0.0) + cand.delta;
    band_hi_ = sh * (sh + 2.0 * c) - cand.delta;
  }

  KusuokaNode root() const {
    KusuokaNode r;
    r.s = model_.s0;
    r.m = model_.s0;
    r.probability = 1.0;
    return r;
  }

  // Both children of `node` at level n − 1 (n = 1..N), given the driver prefix B_0..B_{n−1}.
  Transition step(const KusuokaNode& node, int n, std::span<const double> driver, std::size_t id) const {
    const double t = static_cast<double>(n - 1) / n_;
    const double target = cand_(t, driver);
    check_candidate(target, t);
    Transition tr;
    tr.sigma = std::clamp(target, model_.sigma_low, model_.sigma_high);
    tr.kappa = 0.5 * (target * target / (tr.sigma * tr.sigma) - 1.0);
    const double h = (1.0 + tr.kappa) * tr.sigma / root_n_;
    const double prev = std::exp(node.kappa * node.x);
    tr.q = (prev - std::exp(-h)) / (std::exp(h) - std::exp(-h));
    if (!(tr.q > 0.0 && tr.q < 1.0)) {
      std::ostringstream os;
      os << "N too small: q = " << tr.q << " leaves (0, 1) at level " << n - 1 << ", node " << id
         << " (candidate " << cand_.id << ", N = " << n_ << ")";
      throw PreconditionError(os.str());
    }
    const double scale = std::sqrt(1.0 + 2.0 * tr.kappa) * tr.sigma;
    for (int xi : {-1, 1}) {
      KusuokaNode ch;
      ch.xi = xi;
      ch.sigma = tr.sigma;
      ch.kappa = tr.kappa;
      ch.x = xi * tr.sigma / root_n_;
      ch.b = node.b + (std::exp((1.0 + tr.kappa) * ch.x - node.kappa * node.x) - 1.0) / scale;
      ch.s = node.s * std::exp(ch.x);
      ch.m = ch.s * std::exp(tr.kappa * ch.x);
      ch.q_var = node.q_var + ch.x * ch.x + 2.0 * ((ch.m - ch.s) / ch.s) * ch.x;
      ch.probability = node.probability * (xi > 0 ? tr.q : 1.0 - tr.q);
      (xi > 0 ? tr.up : tr.down) = ch;
    }
    return tr;
  }

  void record(KusuokaReport& rep, const KusuokaNode& node, const Transition& tr) const {
    ++rep.nodes_checked;
    const double eb = tr.q * (tr.up.b - node.b) + (1.0 - tr.q) * (tr.down.b - node.b);
    const double em = (tr.q * tr.up.m + (1.0 - tr.q) * tr.down.m - node.m) / node.m;
    rep.max_b_martingale_error = std::max(rep.max_b_martingale_error, std::abs(eb));
    rep.max_m_martingale_error = std::max(rep.max_m_martingale_error, std::abs(em));
    rep.min_q = std::min(rep.min_q, tr.q);
    rep.max_q = std::max(rep.max_q, tr.q);
    for (const KusuokaNode* ch : {&tr.down, &tr.up}) {
      rep.max_relative_gap = std::max(rep.max_relative_gap, std::abs(ch->m - ch->s) / ch->s);
      const double dq = n_ * (ch->q_var - node.q_var);
      rep.min_scaled_dq = std::min(rep.min_scaled_dq, dq);
      rep.max_scaled_dq = std::max(rep.max_scaled_dq, dq);
    }
  }

private:
  void check_candidate(double value, double t) const {
    const double sq = value * value;
    const double tol = 1e-12;
    if (!(sq >= band_lo_ - tol && sq <= band_hi_ + tol)) {
      std::ostringstream os;
      os << "candidate " << cand_.id << " gives sigma = " << value << " at t = " << t
         << ", outside the admissible band [" << std::sqrt(std::max(band_lo_, 0.0)) << ", "
         << std::sqrt(std::max(band_hi_, 0.0)) << "]";
      throw ValidationError(os.str());
    }
    if (cand_.constant_tail && t >= 1.0 - cand_.delta &&
        std::abs(value - model_.sigma_low) > 1e-12) {
      std::ostringstream os;
      os << "candidate " << cand_.id << " declares a constant tail but gives " << value
         << " at t = " << t;
      throw ValidationError(os.str());
    }
  }

  const VolCandidate& cand_;
  const ModelParams& model_;
  double c_;
  int n_;
  double root_n_;
  double band_lo_ = 0.0, band_hi_ = 0.0;
};

}  // namespace

VolCandidate VolCandidate::constant(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("volatility must be >= 0");
  VolCandidate v;
  v.id = "const:" + format_sigma(sigma);
  v.evaluator = [sigma](double, std::span<const double>) { return sigma; };
  v.lipschitz_const = 0.0;
  v.constant_value = sigma;
  return v;
}

VolCandidate VolCandidate::piecewise_constant(std::vector<double> knots, std::vector<double> values) {
  if (knots.empty() || knots.size() != values.size() || knots.front() != 0.0) {
    throw ValidationError("piecewise-constant candidate needs matching knots starting at 0");
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i] > knots[i - 1])) throw ValidationError("candidate knots must increase");
  }
  for (double v : values) {
    if (!(v >= 0.0)) throw ValidationError("volatility must be >= 0");
  }
  VolCandidate v;
  std::ostringstream os;
  os << "pwc";
  for (std::size_t i = 0; i < knots.size(); ++i) os << ":" << knots[i] << "=" << values[i];
  v.id = os.str();
  v.evaluator = [knots, values](double t, std::span<const double>) {
    const auto it = std::upper_bound(knots.begin(), knots.end(), t);
    return values[static_cast<std::size_t>(std::distance(knots.begin(), it)) - 1];
  };
  return v;
}

VolCandidate VolCandidate::running_max_threshold(double level, double below, double above) {
  if (!(below >= 0.0) || !(above >= 0.0)) throw ValidationError("volatility must be >= 0");
  VolCandidate v;
  v.id = "runmax:" + format_sigma(level) + ":" + format_sigma(below) + ":" + format_sigma(above);
  v.evaluator = [level, below, above](double, std::span<const double> driver) {
    const double peak = driver.empty() ? 0.0 : *std::max_element(driver.begin(), driver.end());
    return peak >= level ? above : below;
  };
  return v;
}

VolCandidate VolCandidate::tanh_of_driver(double base, double amplitude) {
  if (!(base - std::abs(amplitude) >= 0.0)) throw ValidationError("volatility must be >= 0");
  VolCandidate v;
  v.id = "tanh:" + format_sigma(base) + ":" + format_sigma(amplitude);
  v.evaluator = [base, amplitude](double, std::span<const double> driver) {
    return base + amplitude * std::tanh(driver.empty() ? 0.0 : driver.back());
  };
  v.lipschitz_const = std::abs(amplitude);
  return v;
}

VolCandidate VolCandidate::custom(std::string id, VolFunction f, double lipschitz_const) {
  if (!f) throw ValidationError("custom candidate needs an evaluator");
  VolCandidate v;
  v.id = std::move(id);
  v.evaluator = std::move(f);
  v.lipschitz_const = lipschitz_const;
  return v;
}

VolCandidate VolCandidate::with_constant_tail(const VolCandidate& base, double sigma_low,
                                              double delta) {
  if (!(delta > 0.0 && delta < 0.5)) throw ValidationError("tail length delta must lie in (0, 0.5)");
  VolCandidate v = base;
  v.id = base.id + "+tail:" + format_sigma(delta);
  v.delta = delta;
  v.constant_tail = true;
  v.constant_value.reset();
  const VolFunction f = base.evaluator;
  v.evaluator = [f, sigma_low, delta](double t, std::span<const double> driver) {
    const double w = std::clamp((1.0 - delta - t) / delta, 0.0, 1.0);
    if (w == 0.0) return sigma_low;
    return w * f(t, driver) + (1.0 - w) * sigma_low;
  };
  if (std::isfinite(base.lipschitz_const)) {
    // The blend adds at most |σ̃ − σ̲|/δ in t; bounded by the band width.
    v.lipschitz_const = base.lipschitz_const + 1.0 / delta;
  }
  return v;
}

bool KusuokaReport::invariants_hold() const {
  const bool mart = max_b_martingale_error <= 1e-12 && max_m_martingale_error <= 1e-12;
  const bool gap = max_relative_gap <= relative_gap_bound * (1.0 + 1e-12);
  const bool q = min_q > 0.0 && max_q < 1.0;
  const bool mass = !full_tree || std::abs(leaf_mass - 1.0) <= 1e-10;
  const bool dq = min_scaled_dq >= dq_lower - 1e-12 && max_scaled_dq <= dq_upper + 1e-12;
  return mart && gap && q && mass && dq;
}

KusuokaReport kusuoka_measure(const VolCandidate& candidate, const ModelParams& model, double c,
                              std::size_t sample_paths, std::uint64_t seed, int full_tree_limit) {
  require_positive_floor(model);
  if (!(c > 0.0)) throw ValidationError("slope cap c must be > 0");
  if (!candidate.evaluator) throw ValidationError("candidate has no evaluator");
  const int big_n = model.periods;
  const SignTree tree(candidate, model, c);

  KusuokaReport rep;
  rep.periods = big_n;
  rep.c = c;
  rep.relative_gap_bound = c / std::sqrt(static_cast<double>(big_n));
  rep.dq_lower = model.sigma_low * model.sigma_low - 2.0 * c * model.sigma_high;
  rep.dq_upper = model.sigma_high * model.sigma_high + 2.0 * c * model.sigma_high;
  rep.full_tree = big_n <= full_tree_limit;

  if (rep.full_tree) {
    rep.levels.resize(static_cast<std::size_t>(big_n) + 1);
    rep.levels[0] = {tree.root()};
    rep.measure.transitions.resize(static_cast<std::size_t>(big_n));
    std::vector<double> driver;
    for (int n = 1; n <= big_n; ++n) {
      const auto& cur = rep.levels[static_cast<std::size_t>(n - 1)];
      auto& nxt = rep.levels[static_cast<std::size_t>(n)];
      nxt.resize(cur.size() * 2);
      auto& trans = rep.measure.transitions[static_cast<std::size_t>(n - 1)];
      trans.resize(cur.size());
      for (std::size_t id = 0; id < cur.size(); ++id) {
        driver.assign(static_cast<std::size_t>(n), 0.0);
        std::size_t a = id;
        for (int m = n - 1; m >= 0; --m) {
          driver[static_cast<std::size_t>(m)] = rep.levels[static_cast<std::size_t>(m)][a].b;
          a /= 2;
        }
        const Transition tr = tree.step(cur[id], n, driver, id);
        tree.record(rep, cur[id], tr);
        rep.levels[static_cast<std::size_t>(n - 1)][id].up_probability = tr.q;
        nxt[2 * id] = tr.down;
        nxt[2 * id + 1] = tr.up;
        trans[id] = {1.0 - tr.q, tr.q};
      }
    }
    rep.leaf_mass = 0.0;
    for (const auto& leaf : rep.levels.back()) {
      rep.leaf_mass += leaf.probability;
      rep.max_terminal_gap = std::max(rep.max_terminal_gap, std::abs(leaf.m - leaf.s) / leaf.s);
    }
    return rep;
  }

  if (sample_paths < 1) throw ValidationError("sampled check needs at least one path");
  rep.sampled_paths = sample_paths;
  std::vector<double> driver;
  for (std::size_t p = 0; p < sample_paths; ++p) {
    auto eng = stream_engine(seed, p);
    KusuokaNode node = tree.root();
    std::size_t id = 0;
    driver.assign(1, 0.0);
    for (int n = 1; n <= big_n; ++n) {
      const Transition tr = tree.step(node, n, driver, id);
      tree.record(rep, node, tr);
      const bool up = uniform01(eng) < tr.q;
      node = up ? tr.up : tr.down;
      id = 2 * id + (up ? 1 : 0);
      driver.push_back(node.b);
    }
    rep.max_terminal_gap = std::max(rep.max_terminal_gap, std::abs(node.m - node.s) / node.s);
  }
  return rep;
}

std::vector<VolCandidate> constant_family(double sigma_low, double sigma_high, double c, int count) {
  if (count < 2) throw ValidationError("candidate family needs at least two points");
  if (!(sigma_low > 0.0) || !(sigma_high >= sigma_low) || !(c > 0.0)) {
    throw ValidationError("constant family needs 0 < sigma_low <= sigma_high and c > 0");
  }
  std::vector<VolCandidate> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(VolCandidate::constant(sigma_low + (sigma_high - sigma_low) * i / (count - 1)));
  }
  const double top = std::sqrt(sigma_high * sigma_high + 2.0 * c * sigma_high) * (1.0 - 1e-12);
  for (int i = 1; i < count; ++i) {
    out.push_back(VolCandidate::constant(sigma_high + (top - sigma_high) * i / (count - 1)));
  }
  return out;
}

LimitEstimate limit_value_estimate(const std::vector<VolCandidate>& candidates,
                                   const PayoffSpec& payoff, const LimitCurvature& curvature,
                                   const ModelParams& model, double c, const MonteCarloOptions& mc) {
  require_positive_floor(model);
  if (!(c > 0.0)) throw ValidationError("slope cap c must be > 0");
  if (mc.paths < 2) throw ValidationError("mc.paths must be >= 2");
  if (mc.steps < 1) throw ValidationError("mc.steps must be >= 1");
  const double sl = model.sigma_low, sh = model.sigma_high;

  LimitEstimate est;
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    const VolCandidate& cand = candidates[ci];
    LimitCandidateRow row;
    row.id = cand.id;
    auto reject = [&](double sigma, double t) {
      const double a = penalty_a(sigma, sl, sh);
      std::ostringstream os;
      if (curvature.infinite) {
        os << "sigma = " << sigma << " at t = " << t << " lies outside [" << sl << ", " << sh
           << "], excluded without frictions";
      } else {
        os << "a(sigma) = " << a << " exceeds c = " << c << " at sigma = " << sigma << ", t = " << t;
      }
      row.rejected = true;
      row.reason = os.str();
    };
    auto inadmissible = [&](double sigma) {
      const double a = penalty_a(sigma, sl, sh);
      return a > c || (curvature.infinite && a > 0.0);
    };

    const std::uint64_t cseed = substream_seed(mc.seed, cand.id) ^ mix64(ci);
    const bool exact = cand.constant_value.has_value();
    if (exact && inadmissible(*cand.constant_value)) reject(*cand.constant_value, 0.0);
    const bool one_step = exact && payoff.terminal_only() &&
                          (!row.rejected && penalty_a(*cand.constant_value, sl, sh) == 0.0);
    const int steps = one_step ? 1 : mc.steps;
    const double dt = 1.0 / steps;
    const double sqdt = std::sqrt(dt);

    double sum = 0.0, sum_sq = 0.0, pen_sum = 0.0;
    std::vector<double> prices(static_cast<std::size_t>(steps) + 1);
    std::vector<double> driver;
    driver.reserve(static_cast<std::size_t>(steps) + 1);
    for (std::size_t p = 0; p < mc.paths && !row.rejected; ++p) {
      NormalSource normals(stream_engine(cseed, p));
      prices[0] = model.s0;
      driver.assign(1, 0.0);
      double log_s = std::log(model.s0);
      double penalty = 0.0;
      for (int i = 0; i < steps; ++i) {
        const double t = i * dt;
        const double sigma = exact ? *cand.constant_value : cand(t, driver);
        if (!exact && inadmissible(sigma)) {
          reject(sigma, t);
          break;
        }
        const double a = penalty_a(sigma, sl, sh);
        if (a > 0.0) {
          const std::span<const double> hist(prices.data(), static_cast<std::size_t>(i) + 1);
          penalty += curvature(t, hist) * a * a * dt;
        }
        const double dw = sqdt * normals.next();
        log_s += sigma * dw - 0.5 * sigma * sigma * dt;
        prices[static_cast<std::size_t>(i) + 1] = std::exp(log_s);
        driver.push_back(driver.back() + dw);
      }
      if (row.rejected) break;
      const double v = payoff(prices) - penalty;
      sum += v;
      sum_sq += v * v;
      pen_sum += penalty;
    }
    if (!row.rejected) {
      const double n = static_cast<double>(mc.paths);
      row.value = sum / n;
      row.mean_penalty = pen_sum / n;
      const double var = std::max(0.0, (sum_sq - n * row.value * row.value) / (n - 1.0));
      row.std_error = std::sqrt(var / n);
      if (row.value > est.best_value) {
        est.best_value = row.value;
        est.best_std_error = row.std_error;
        est.best_id = row.id;
      }
    }
    est.rows.push_back(row);
  }
  return est;
}

PriceReport scaled_price(const CostSpec& h, double c, const PayoffSpec& payoff, int periods,
                         const ModelParams& model, const HoldingGridConfig& grid,
                         std::size_t node_budget) {
  if (periods < 1) throw ValidationError("N must be >= 1");
  const CostSpec cost = scaled_cost(h, c, periods);
  const double root_n = std::sqrt(static_cast<double>(periods));
  ModelParams per;
  per.s0 = model.s0;
  per.periods = periods;
  per.sigma_low = model.sigma_low / root_n;
  per.sigma_high = model.sigma_high / root_n;
  per.refinement = 1;
  per.validate();
  if (!cost.path_dependent() && payoff.convex_in_path()) {
    if (payoff.terminal_only()) {
      return binomial_value(per.s0, periods, per.sigma_high, cost, payoff, grid);
    }
    per.sigma_low = per.sigma_high;
  }
  const LatticeModel tree = build_tree(per, node_budget);
  return solve_primal_dp(tree, cost, payoff, grid).report;
}

ConvergenceStudy convergence_study(const CostSpec& h, double c, const PayoffSpec& payoff,
                                   const std::vector<int>& periods, const ModelParams& model,
                                   const ConvergenceOptions& options) {
  require_positive_floor(model);
  if (!(c > 0.0)) throw ValidationError("slope cap c must be > 0");
  if (periods.empty()) throw ValidationError("N list must not be empty");
  for (std::size_t i = 1; i < periods.size(); ++i) {
    if (!(periods[i] > periods[i - 1])) throw ValidationError("N list must be ascending");
  }
  if (options.lower_bound_grid < 1) throw ValidationError("lower_bound_grid must be >= 1");

  // Constant volatilities inside the band cost nothing in the limit.
  double lower = -std::numeric_limits<double>::infinity(), lower_se = 0.0;
  const double sl = model.sigma_low, sh = model.sigma_high;
  const int g = options.lower_bound_grid;
  std::vector<double> band;
  for (int i = 0; i < g; ++i) band.push_back(g == 1 ? sh : sl + (sh - sl) * i / (g - 1));
  bool closed_form = true;
  try {
    for (double s : band) {
      const double v = black_scholes_price(payoff, model.s0, s);
      if (v > lower) lower = v;
    }
  } catch (const PreconditionError&) {
    closed_form = false;
  }
  if (!closed_form) {
    std::vector<VolCandidate> fam;
    for (double s : band) fam.push_back(VolCandidate::constant(s));
    const LimitEstimate e =
        limit_value_estimate(fam, payoff, LimitCurvature::constant(0.0), model, c, options.mc);
    lower = e.best_value;
    lower_se = e.best_std_error;
  }

  LimitEstimate limit;
  if (!options.skip_limit_estimate) {
    const auto fam = options.candidates.empty() ? constant_family(sl, sh, c, 5) : options.candidates;
    const LimitCurvature curv = options.curvature ? *options.curvature : LimitCurvature::from_cost(h);
    limit = limit_value_estimate(fam, payoff, curv, model, c, options.mc);
  }

  ConvergenceStudy study;
  for (int n : periods) {
    const PriceReport r = scaled_price(h, c, payoff, n, model, options.grid, options.node_budget);
    ConvergenceRow row;
    row.periods = n;
    row.value = r.value;
    row.grid_error = r.grid_error_bound;
    row.backend = r.backend;
    row.lower_bound = lower;
    row.lower_bound_se = lower_se;
    row.best_limit_estimate = options.skip_limit_estimate ? std::nan("") : limit.best_value;
    row.best_candidate_id = limit.best_id;
    row.above_lower_bound = row.value >= lower - 3.0 * lower_se - 1e-12;
    study.rows.push_back(row);
  }
  return study;
}

std::string ConvergenceStudy::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "N,V_N,lower_bound,lower_bound_se,best_limit_estimate,best_candidate_id\n";
  for (const auto& r : rows) {
    os << r.periods << "," << r.value << "," << r.lower_bound << "," << r.lower_bound_se << ","
       << r.best_limit_estimate << "," << r.best_candidate_id << "\n";
  }
  return os.str();
}

}  // namespace superhedge

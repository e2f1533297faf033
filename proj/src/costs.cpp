#include "superhedge/costs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "superhedge/errors.hpp"

namespace superhedge {

namespace {

// Dual arguments this close to the boundary of a conjugate's domain are
// snapped onto it; drift ratios arrive through divisions of nearly equal prices.
constexpr double kDomainSnap = 1e-11;

constexpr int kMaxDoublings = 60;

double checked(double v, const std::string& label) {
  if (std::isnan(v) || v < 0.0) {
    std::ostringstream os;
    os << "cost '" << label << "' returned " << v << "; costs must be nonnegative numbers";
    throw ValidationError(os.str());
  }
  return v;
}

ConjugatePoint infinite_at(double alpha) {
  return {ExtendedReal::plus_infinity(), alpha > 0 ? HUGE_VAL : -HUGE_VAL};
}

}  // namespace

double CostContext::interpolated_price(double t) const {
  if (prices.empty()) throw DomainError("interpolated_price on an empty history");
  const double pos = t * horizon;
  if (pos <= 0.0) return prices.front();
  const auto last = static_cast<double>(prices.size() - 1);
  if (pos >= last) return prices.back();
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double w = pos - static_cast<double>(i);
  return (1.0 - w) * prices[i] + w * prices[i + 1];
}

std::string to_string(CostKind kind) {
  switch (kind) {
    case CostKind::zero: return "zero";
    case CostKind::proportional: return "proportional";
    case CostKind::quadratic: return "quadratic";
    case CostKind::truncated_quadratic: return "truncated_quadratic";
    case CostKind::piecewise_linear: return "piecewise_linear";
    case CostKind::custom: return "custom";
  }
  return "unknown";
}

CostSpec CostSpec::zero() {
  CostSpec c;
  c.slopes_ = {0.0};
  return c;
}

CostSpec CostSpec::proportional(double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw ValidationError("cost.rate must be finite and >= 0");
  }
  CostSpec c;
  c.kind_ = CostKind::proportional;
  c.rate_ = rate;
  c.breakpoints_ = {0.0};
  c.slopes_ = {-rate, rate};
  c.label_ = "proportional";
  return c;
}

CostSpec CostSpec::quadratic(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("cost.lambda must be finite and > 0");
  }
  CostSpec c;
  c.kind_ = CostKind::quadratic;
  c.lambda_ = lambda;
  c.label_ = "quadratic";
  return c;
}

CostSpec CostSpec::truncated_quadratic(double lambda, double cap) {
  CostSpec c = quadratic(lambda);
  if (!(cap > 0.0)) throw ValidationError("cost.cap must be > 0");
  if (std::isinf(cap)) return c;
  c.kind_ = CostKind::truncated_quadratic;
  c.cap_ = cap;
  c.label_ = "truncated_quadratic";
  return c;
}

CostSpec CostSpec::piecewise_linear(std::vector<double> breakpoints, std::vector<double> slopes) {
  if (slopes.size() != breakpoints.size() + 1) {
    throw ValidationError("cost.slopes must have one more entry than cost.breakpoints");
  }
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1])) {
      throw ValidationError("cost.breakpoints must be strictly increasing");
    }
  }
  for (std::size_t i = 1; i < slopes.size(); ++i) {
    if (slopes[i] < slopes[i - 1]) throw ValidationError("cost.slopes must be nondecreasing");
  }
  for (double s : slopes) {
    if (!std::isfinite(s)) throw ValidationError("cost.slopes must be finite");
  }
  // g ≥ 0 with g(0) = 0 forces 0 to be a minimiser.
  const auto seg0 = static_cast<std::size_t>(
      std::upper_bound(breakpoints.begin(), breakpoints.end(), 0.0) - breakpoints.begin());
  const double right = slopes[seg0];
  const auto segl = static_cast<std::size_t>(
      std::lower_bound(breakpoints.begin(), breakpoints.end(), 0.0) - breakpoints.begin());
  const double left = slopes[segl];
  if (right < 0.0 || left > 0.0) {
    throw ValidationError("piecewise-linear cost must be nonnegative with g(0) = 0");
  }
  CostSpec c;
  c.kind_ = CostKind::piecewise_linear;
  c.breakpoints_ = std::move(breakpoints);
  c.slopes_ = std::move(slopes);
  c.label_ = "piecewise_linear";
  if (c.slopes_.size() == 1) return zero();
  return c;
}

CostSpec CostSpec::tabulated(std::vector<double> beta, std::vector<double> cost) {
  if (beta.size() != cost.size() || beta.size() < 2) {
    throw ValidationError("tabulated cost needs at least two (beta, cost) pairs of equal length");
  }
  bool has_origin = false;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (i > 0 && !(beta[i] > beta[i - 1])) {
      throw ValidationError("tabulated cost: beta values must be strictly increasing");
    }
    if (!(cost[i] >= 0.0)) throw ValidationError("tabulated cost: values must be >= 0");
    if (beta[i] == 0.0) {
      if (cost[i] != 0.0) throw ValidationError("tabulated cost: g(0) must be 0");
      has_origin = true;
    }
  }
  if (!has_origin) throw ValidationError("tabulated cost: table must contain beta = 0");
  std::vector<double> slopes;
  for (std::size_t i = 1; i < beta.size(); ++i) {
    slopes.push_back((cost[i] - cost[i - 1]) / (beta[i] - beta[i - 1]));
  }
  for (std::size_t i = 1; i < slopes.size(); ++i) {
    if (slopes[i] < slopes[i - 1] - 1e-12 * (1.0 + std::abs(slopes[i - 1]))) {
      throw ValidationError("tabulated cost is not convex: table lies above its convex hull");
    }
    slopes[i] = std::max(slopes[i], slopes[i - 1]);
  }
  std::vector<double> breakpoints(beta.begin() + 1, beta.end() - 1);
  return piecewise_linear(std::move(breakpoints), std::move(slopes));
}

CostSpec CostSpec::custom(CostEvaluator evaluator, bool path_dependent, std::string label) {
  if (!evaluator) throw ValidationError("custom cost needs an evaluator");
  CostSpec c;
  c.kind_ = CostKind::custom;
  c.custom_ = std::move(evaluator);
  c.path_dependent_ = path_dependent;
  c.label_ = std::move(label);
  return c;
}

std::vector<CostSpec::AffinePiece> CostSpec::affine_pieces() const {
  if (!is_piecewise_linear()) {
    throw PreconditionError("affine_pieces requires a piecewise-linear cost");
  }
  std::vector<AffinePiece> pieces;
  if (breakpoints_.empty()) {
    pieces.push_back({0.0, 0.0});
    return pieces;
  }
  for (std::size_t i = 0; i < slopes_.size(); ++i) {
    const double anchor = breakpoints_[i == 0 ? 0 : i - 1];
    pieces.push_back({slopes_[i], (*this)(anchor) - slopes_[i] * anchor});
  }
  return pieces;
}

double CostSpec::operator()(double beta) const {
  switch (kind_) {
    case CostKind::zero: return 0.0;
    case CostKind::proportional: return rate_ * std::abs(beta);
    case CostKind::quadratic: return lambda_ * beta * beta;
    case CostKind::truncated_quadratic: {
      const double a = std::abs(beta);
      if (a <= cap_ / (2.0 * lambda_)) return lambda_ * beta * beta;
      return cap_ * a - cap_ * cap_ / (4.0 * lambda_);
    }
    case CostKind::piecewise_linear: {
      // Integrate the slope from 0 to β.
      double value = 0.0;
      if (beta >= 0.0) {
        double pos = 0.0;
        auto seg = static_cast<std::size_t>(
            std::upper_bound(breakpoints_.begin(), breakpoints_.end(), 0.0) - breakpoints_.begin());
        while (seg < breakpoints_.size() && breakpoints_[seg] < beta) {
          value += slopes_[seg] * (breakpoints_[seg] - pos);
          pos = breakpoints_[seg];
          ++seg;
        }
        value += slopes_[seg] * (beta - pos);
      } else {
        double pos = 0.0;
        auto seg = static_cast<std::size_t>(
            std::lower_bound(breakpoints_.begin(), breakpoints_.end(), 0.0) - breakpoints_.begin());
        while (seg > 0 && breakpoints_[seg - 1] > beta) {
          value += slopes_[seg] * (breakpoints_[seg - 1] - pos);
          pos = breakpoints_[seg - 1];
          --seg;
        }
        value += slopes_[seg] * (beta - pos);
      }
      return std::max(value, 0.0);
    }
    case CostKind::custom: {
      if (path_dependent_) {
        throw PreconditionError("path-dependent cost '" + label_ + "' evaluated without a history");
      }
      CostContext ctx;
      return (*this)(ctx, beta);
    }
  }
  return 0.0;
}

double CostSpec::operator()(const CostContext& ctx, double beta) const {
  if (kind_ != CostKind::custom) return (*this)(beta);
  return checked(custom_(ctx, beta), label_);
}

ConjugatePoint numeric_conjugate(const std::function<ExtendedReal(double)>& f, double x) {
  const ExtendedReal f0 = f(0.0);
  if (!f0.is_finite()) throw DomainError("numeric_conjugate: f(0) must be finite");

  // Effective domain of f, one side at a time: dom is [lo_dom, hi_dom].
  auto domain_edge = [&](double sign) {
    double inside = 0.0;
    double probe = 1.0;
    for (int i = 0; i <= kMaxDoublings; ++i, probe *= 2.0) {
      if (!f(sign * probe).is_finite()) {
        double a = inside, b = probe;
        for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + a); ++it) {
          const double m = 0.5 * (a + b);
          (f(sign * m).is_finite() ? a : b) = m;
        }
        return sign * a;
      }
      inside = probe;
    }
    return sign * HUGE_VAL;
  };
  const double hi_dom = domain_edge(+1.0);
  const double lo_dom = domain_edge(-1.0);

  auto phi = [&](double beta) { return x * beta - f(beta).value(); };

  // Bracket the maximiser on each side. For concave φ, φ(2L) ≤ φ(L) with
  // 0 < L implies every maximiser lies below 2L.
  auto bracket = [&](double sign, double edge) -> std::pair<bool, double> {
    const double limit = std::abs(edge);
    double l = std::min(1.0, limit);
    if (l == limit) return {true, edge};
    double val = phi(sign * l);
    for (int i = 0; i < kMaxDoublings; ++i) {
      const double next = 2.0 * l;
      if (next >= limit) return {true, edge};
      const double nv = phi(sign * next);
      if (nv <= val) return {true, sign * next};
      l = next;
      val = nv;
    }
    return {false, sign * HUGE_VAL};
  };
  const auto [hi_ok, hi] = bracket(+1.0, hi_dom);
  if (!hi_ok) return {ExtendedReal::plus_infinity(), HUGE_VAL};
  const auto [lo_ok, lo] = bracket(-1.0, lo_dom);
  if (!lo_ok) return {ExtendedReal::plus_infinity(), -HUGE_VAL};

  double best_beta = 0.0;
  double best = phi(0.0);
  auto consider = [&](double b, double v) {
    if (v > best) {
      best = v;
      best_beta = b;
    }
  };
  consider(lo, phi(lo));
  consider(hi, phi(hi));

  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = phi(c), fd = phi(d);
  for (int it = 0; it < 400 && (b - a) > 1e-12 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = phi(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = phi(d);
    }
    consider(c, fc);
    consider(d, fd);
  }
  return {ExtendedReal(best), best_beta};
}

ConjugatePoint conjugate_point(const CostSpec& cost, const CostContext& ctx, double alpha) {
  switch (cost.kind()) {
    case CostKind::zero:
      if (std::abs(alpha) <= kDomainSnap) return {ExtendedReal(0.0), 0.0};
      return infinite_at(alpha);
    case CostKind::proportional:
      if (std::abs(alpha) <= cost.rate() + kDomainSnap) return {ExtendedReal(0.0), 0.0};
      return infinite_at(alpha);
    case CostKind::quadratic:
      return {ExtendedReal(alpha * alpha / (4.0 * cost.lambda())), alpha / (2.0 * cost.lambda())};
    case CostKind::truncated_quadratic: {
      if (std::abs(alpha) > cost.cap() + kDomainSnap) return infinite_at(alpha);
      const double a = std::clamp(alpha, -cost.cap(), cost.cap());
      return {ExtendedReal(a * a / (4.0 * cost.lambda())), a / (2.0 * cost.lambda())};
    }
    case CostKind::piecewise_linear: {
      const auto& s = cost.slopes();
      if (alpha < s.front() - kDomainSnap || alpha > s.back() + kDomainSnap) {
        return infinite_at(alpha);
      }
      const double a = std::clamp(alpha, s.front(), s.back());
      // The objective is linear on each segment, so the sup sits at a vertex.
      double best = 0.0, arg = 0.0;
      for (double v : cost.breakpoints()) {
        const double val = a * v - cost(v);
        if (val > best) {
          best = val;
          arg = v;
        }
      }
      return {ExtendedReal(best), arg};
    }
    case CostKind::custom:
      return numeric_conjugate([&](double beta) { return ExtendedReal(cost(ctx, beta)); }, alpha);
  }
  throw InternalError("unknown cost kind");
}

ExtendedReal conjugate(const CostSpec& cost, const CostContext& ctx, double alpha) {
  return conjugate_point(cost, ctx, alpha).value;
}

ExtendedReal conjugate(const CostSpec& cost, double alpha) {
  CostContext ctx;
  return conjugate(cost, ctx, alpha);
}

namespace {

// Largest β ≥ 0 (sign = +1) or smallest β ≤ 0 (sign = −1) where the outward
// slope of h has not yet exceeded c; ±HUGE_VAL if it never does.
double slope_edge(const CostSpec& h, const CostContext& ctx, double c, double sign) {
  auto slope = [&](double beta) {
    const double eta = 1e-7 * std::max(1.0, std::abs(beta));
    return (h(ctx, beta + sign * eta) - h(ctx, beta)) / eta;
  };
  if (slope(0.0) > c) return 0.0;
  double inside = 0.0, probe = 1.0;
  for (int i = 0; i <= kMaxDoublings; ++i, probe *= 2.0) {
    if (slope(sign * probe) > c) break;
    inside = probe;
    if (i == kMaxDoublings) return sign * HUGE_VAL;
  }
  double a = inside, b = probe;
  for (int it = 0; it < 200 && b - a > 1e-13 * (1.0 + b); ++it) {
    const double m = 0.5 * (a + b);
    (slope(sign * m) > c ? b : a) = m;
  }
  return sign * a;
}

}  // namespace

CostSpec truncate(const CostSpec& h, double c) {
  if (!(c > 0.0)) throw ValidationError("truncation slope c must be > 0");
  switch (h.kind()) {
    case CostKind::zero: return h;
    case CostKind::proportional: return CostSpec::proportional(std::min(h.rate(), c));
    case CostKind::quadratic: return CostSpec::truncated_quadratic(h.lambda(), c);
    case CostKind::truncated_quadratic:
      return CostSpec::truncated_quadratic(h.lambda(), std::min(h.cap(), c));
    case CostKind::piecewise_linear: {
      auto slopes = h.slopes();
      for (double& s : slopes) s = std::clamp(s, -c, c);
      // Merge segments whose clamped slopes coincide.
      std::vector<double> bps, merged{slopes.front()};
      for (std::size_t i = 0; i < h.breakpoints().size(); ++i) {
        if (slopes[i + 1] != merged.back()) {
          bps.push_back(h.breakpoints()[i]);
          merged.push_back(slopes[i + 1]);
        }
      }
      if (merged.size() == 1) return CostSpec::zero();
      return CostSpec::piecewise_linear(std::move(bps), std::move(merged));
    }
    case CostKind::custom: {
      auto base = std::make_shared<CostSpec>(h);
      auto eval = [base, c](const CostContext& ctx, double beta) {
        const double sign = beta >= 0.0 ? 1.0 : -1.0;
        const double edge = slope_edge(*base, ctx, c, sign);
        if (std::abs(beta) <= std::abs(edge)) return (*base)(ctx, beta);
        return (*base)(ctx, edge) + c * std::abs(beta - edge);
      };
      return CostSpec::custom(eval, h.path_dependent(), h.label() + "^c");
    }
  }
  throw InternalError("unknown cost kind");
}

CostSpec scaled_cost(const CostSpec& h, double c, int horizon) {
  if (horizon < 1) throw ValidationError("horizon N must be >= 1");
  return truncate(h, c / std::sqrt(static_cast<double>(horizon)));
}

std::function<double(double)> scaled_cost(const CostSpec& h, double c, int horizon, int period,
                                          std::vector<double> prices) {
  if (period < 0 || period > horizon) throw ValidationError("period must lie in [0, N]");
  if (prices.size() != static_cast<std::size_t>(period) + 1) {
    throw ShapeError("price history must hold S_0..S_n");
  }
  auto g = std::make_shared<CostSpec>(scaled_cost(h, c, horizon));
  auto history = std::make_shared<std::vector<double>>(std::move(prices));
  return [g, history, horizon, period](double beta) {
    CostContext ctx{period, horizon, *history};
    return (*g)(ctx, beta);
  };
}

LimitCurvature LimitCurvature::constant(double value) {
  if (!(value >= 0.0)) throw ValidationError("limit curvature must be >= 0");
  return {[value](double, std::span<const double>) { return value; }, false};
}

LimitCurvature LimitCurvature::frictionless() { return {nullptr, true}; }

LimitCurvature LimitCurvature::from_cost(const CostSpec& h) {
  switch (h.kind()) {
    case CostKind::zero: return frictionless();
    case CostKind::proportional: return constant(0.0);
    case CostKind::quadratic:
    case CostKind::truncated_quadratic: return constant(1.0 / (4.0 * h.lambda()));
    case CostKind::piecewise_linear: {
      const auto& bps = h.breakpoints();
      const auto it = std::find(bps.begin(), bps.end(), 0.0);
      if (it != bps.end()) {
        const auto i = static_cast<std::size_t>(it - bps.begin());
        if (h.slopes()[i] < 0.0 && h.slopes()[i + 1] > 0.0) return constant(0.0);
      }
      throw PreconditionError(
          "piecewise-linear cost without a kink at 0 has no quadratic limit curvature");
    }
    case CostKind::custom: {
      if (h.path_dependent()) {
        throw PreconditionError("supply the limit curvature explicitly for path-dependent costs");
      }
      const double step = 1e-4;
      const double second = (h(step) - 2.0 * h(0.0) + h(-step)) / (step * step);
      if (!(second > 0.0) || !std::isfinite(second)) {
        throw PreconditionError("custom cost has no positive curvature at 0");
      }
      return constant(1.0 / (2.0 * second));
    }
  }
  throw InternalError("unknown cost kind");
}

double LimitCurvature::operator()(double t, std::span<const double> path) const {
  if (infinite) return HUGE_VAL;
  return evaluator(t, path);
}

double penalty_a(double sigma, double sigma_low, double sigma_high) {
  if (!(sigma_low > 0.0) || !(sigma_high >= sigma_low)) {
    throw ValidationError("penalty a(sigma) needs 0 < sigma_low <= sigma_high");
  }
  if (sigma < 0.0) throw DomainError("penalty a(sigma) needs sigma >= 0");
  if (sigma < sigma_low) return 0.5 * (sigma_low * sigma_low - sigma * sigma) / sigma_low;
  if (sigma > sigma_high) return 0.5 * (sigma * sigma - sigma_high * sigma_high) / sigma_high;
  return 0.0;
}

double penalty_b(double u, double sigma_low, double sigma_high) {
  const double l2 = sigma_low * sigma_low;
  if (!(sigma_low > 0.0)) throw ValidationError("penalty b(u) needs sigma_low > 0");
  if (u <= -l2) return -u;
  if (u < 0.0) return 0.25 * (l2 - u) * (l2 - u) / l2;
  const double a = penalty_a(std::sqrt(u), sigma_low, sigma_high);
  return a * a;
}

bool penalty_b_inequality_holds(double x, double y, double sigma_low, double sigma_high) {
  const double ax = std::abs(x);
  if (ax < sigma_low - kDomainSnap || ax > sigma_high + kDomainSnap) {
    throw DomainError("|x| must lie in [sigma_low, sigma_high]");
  }
  return penalty_b(x * x + 2.0 * x * y, sigma_low, sigma_high) <= y * y + 1e-12;
}

}  // namespace superhedge

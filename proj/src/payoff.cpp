#include "superhedge/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "superhedge/errors.hpp"

namespace superhedge {

std::string to_string(PayoffKind kind) {
  switch (kind) {
    case PayoffKind::call: return "call";
    case PayoffKind::put: return "put";
    case PayoffKind::lookback_max: return "lookback_max";
    case PayoffKind::asian_average: return "asian_average";
    case PayoffKind::constant: return "constant";
    case PayoffKind::custom: return "custom";
  }
  return "unknown";
}

namespace {
void check_strike(double k) {
  if (!(k >= 0.0) || !std::isfinite(k)) throw ValidationError("payoff.strike must be finite and >= 0");
}
}  // namespace

PayoffSpec PayoffSpec::call(double strike) {
  check_strike(strike);
  PayoffSpec p;
  p.kind_ = PayoffKind::call;
  p.strike_ = strike;
  p.label_ = "call";
  return p;
}

PayoffSpec PayoffSpec::put(double strike) {
  check_strike(strike);
  PayoffSpec p;
  p.kind_ = PayoffKind::put;
  p.strike_ = strike;
  p.label_ = "put";
  return p;
}

PayoffSpec PayoffSpec::lookback_max() {
  PayoffSpec p;
  p.kind_ = PayoffKind::lookback_max;
  p.label_ = "lookback_max";
  return p;
}

PayoffSpec PayoffSpec::asian_average(double strike) {
  check_strike(strike);
  PayoffSpec p;
  p.kind_ = PayoffKind::asian_average;
  p.strike_ = strike;
  p.label_ = "asian_average";
  return p;
}

PayoffSpec PayoffSpec::constant(double level) {
  if (!(level >= 0.0) || !std::isfinite(level)) {
    throw ValidationError("payoff.level must be finite and >= 0");
  }
  PayoffSpec p;
  p.kind_ = PayoffKind::constant;
  p.strike_ = level;
  p.label_ = "constant";
  return p;
}

PayoffSpec PayoffSpec::custom(PayoffFunctional f, bool convex_in_path, std::string label) {
  if (!f) throw ValidationError("custom payoff needs a functional");
  PayoffSpec p;
  p.kind_ = PayoffKind::custom;
  p.custom_ = std::move(f);
  p.convex_ = convex_in_path;
  p.label_ = std::move(label);
  return p;
}

double PayoffSpec::operator()(std::span<const double> prices) const {
  if (prices.empty()) throw ShapeError("payoff evaluated on an empty path");
  switch (kind_) {
    case PayoffKind::call:
    case PayoffKind::put:
    case PayoffKind::constant:
      return terminal(prices.back());
    case PayoffKind::lookback_max:
      return *std::max_element(prices.begin(), prices.end());
    case PayoffKind::asian_average: {
      const double mean = std::accumulate(prices.begin(), prices.end(), 0.0) /
                          static_cast<double>(prices.size());
      return std::max(mean - strike_, 0.0);
    }
    case PayoffKind::custom: {
      const double v = custom_(prices);
      if (std::isnan(v) || v < 0.0) {
        throw ValidationError("custom payoff '" + label_ + "' must be nonnegative");
      }
      return v;
    }
  }
  throw InternalError("unknown payoff kind");
}

double PayoffSpec::terminal(double s_n) const {
  switch (kind_) {
    case PayoffKind::call: return std::max(s_n - strike_, 0.0);
    case PayoffKind::put: return std::max(strike_ - s_n, 0.0);
    case PayoffKind::constant: return strike_;
    default: throw PreconditionError("payoff '" + label_ + "' depends on the whole path");
  }
}

double continuity_probe(const PayoffSpec& payoff, std::span<const double> prices, double h) {
  const double base = payoff(prices);
  std::vector<double> bumped(prices.begin(), prices.end());
  double worst = 0.0;
  for (std::size_t n = 0; n < bumped.size(); ++n) {
    for (double sign : {-1.0, 1.0}) {
      bumped[n] = prices[n] * (1.0 + sign * h);
      worst = std::max(worst, std::abs(payoff(bumped) - base));
      bumped[n] = prices[n];
    }
  }
  return worst;
}

}  // namespace superhedge

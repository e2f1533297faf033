#include "superhedge/black_scholes.hpp"

#include <algorithm>
#include <cmath>

#include "superhedge/errors.hpp"

namespace superhedge {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double black_scholes_call(double s0, double strike, double sigma, double maturity) {
  if (!(s0 > 0.0) || !(sigma >= 0.0) || !(maturity >= 0.0)) {
    throw ValidationError("Black-Scholes needs s0 > 0, sigma >= 0 and maturity >= 0");
  }
  const double vol = sigma * std::sqrt(maturity);
  if (strike <= 0.0) return s0 - strike;
  if (vol == 0.0) return std::max(s0 - strike, 0.0);
  const double d1 = (std::log(s0 / strike) + 0.5 * vol * vol) / vol;
  return s0 * normal_cdf(d1) - strike * normal_cdf(d1 - vol);
}

double black_scholes_put(double s0, double strike, double sigma, double maturity) {
  // Put–call parity at zero rate.
  return black_scholes_call(s0, strike, sigma, maturity) - s0 + strike;
}

double black_scholes_price(const PayoffSpec& payoff, double s0, double sigma, double maturity) {
  switch (payoff.kind()) {
    case PayoffKind::call: return black_scholes_call(s0, payoff.strike(), sigma, maturity);
    case PayoffKind::put:
      return std::max(0.0, black_scholes_put(s0, payoff.strike(), sigma, maturity));
    case PayoffKind::constant: return payoff.terminal(s0);
    default: throw PreconditionError("no closed form for payoff " + payoff.label());
  }
}

}  // namespace superhedge

#pragma once

#include "superhedge/payoff.hpp"

namespace superhedge {

double normal_cdf(double x);

/// Zero-rate Black–Scholes prices.
double black_scholes_call(double s0, double strike, double sigma, double maturity = 1.0);
double black_scholes_put(double s0, double strike, double sigma, double maturity = 1.0);

/// Closed form for call, put and constant payoffs; PreconditionError otherwise.
double black_scholes_price(const PayoffSpec& payoff, double s0, double sigma, double maturity = 1.0);

}  // namespace superhedge

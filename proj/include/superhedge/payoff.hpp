#pragma once

#include <functional>
#include <span>
#include <string>

namespace superhedge {

enum class PayoffKind { call, put, lookback_max, asian_average, constant, custom };

std::string to_string(PayoffKind kind);

using PayoffFunctional = std::function<double(std::span<const double> prices)>;

/// European claim F(S_0, …, S_N) ≥ 0 on the whole price path.
class PayoffSpec {
public:
  static PayoffSpec call(double strike);
  static PayoffSpec put(double strike);
  /// max_n S_n.
  static PayoffSpec lookback_max();
  /// (mean of S_0..S_N − K)^+.
  static PayoffSpec asian_average(double strike);
  static PayoffSpec constant(double level);
  /// `convex_in_path` must be truthful; convex-payoff results rely on it.
  static PayoffSpec custom(PayoffFunctional f, bool convex_in_path, std::string label = "custom");

  PayoffKind kind() const { return kind_; }
  bool convex_in_path() const { return convex_; }
  /// Depends on S_N only.
  bool terminal_only() const {
    return kind_ == PayoffKind::call || kind_ == PayoffKind::put || kind_ == PayoffKind::constant;
  }
  double strike() const { return strike_; }
  const std::string& label() const { return label_; }

  double operator()(std::span<const double> prices) const;

  /// Terminal-price form; requires terminal_only().
  double terminal(double s_n) const;

private:
  PayoffKind kind_ = PayoffKind::constant;
  double strike_ = 0.0;
  bool convex_ = true;
  PayoffFunctional custom_;
  std::string label_;
};

/// Perturbs each price by ±h·S_n on the given path and reports the largest
/// payoff change; a continuous payoff gives a change that shrinks with h.
double continuity_probe(const PayoffSpec& payoff, std::span<const double> prices, double h);

}  // namespace superhedge

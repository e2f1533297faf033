#pragma once

#include <compare>
#include <iosfwd>
#include <string>

namespace superhedge {

/// A real number or one of the two infinities, tagged explicitly.
class ExtendedReal {
public:
  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT implicit by intent

  static constexpr ExtendedReal plus_infinity() { return ExtendedReal(0.0, +1); }
  static constexpr ExtendedReal minus_infinity() { return ExtendedReal(0.0, -1); }

  constexpr bool is_finite() const { return inf_ == 0; }
  constexpr bool is_plus_infinity() const { return inf_ > 0; }
  constexpr bool is_minus_infinity() const { return inf_ < 0; }

  /// Finite value; throws DomainError on an infinity.
  double value() const;

  /// Finite value, or +/-HUGE_VAL for the infinities. For display only.
  double to_double() const;

  std::string to_string() const;

  friend ExtendedReal operator+(ExtendedReal a, ExtendedReal b);
  friend ExtendedReal operator-(ExtendedReal a);
  friend ExtendedReal operator-(ExtendedReal a, ExtendedReal b) { return a + (-b); }
  friend std::partial_ordering operator<=>(ExtendedReal a, ExtendedReal b);
  friend bool operator==(ExtendedReal a, ExtendedReal b);

private:
  constexpr ExtendedReal(double v, int inf) : value_(v), inf_(inf) {}

  double value_ = 0.0;
  int inf_ = 0;
};

std::ostream& operator<<(std::ostream& os, ExtendedReal x);

}  // namespace superhedge

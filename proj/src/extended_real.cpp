#include "superhedge/extended_real.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "superhedge/errors.hpp"

namespace superhedge {

double ExtendedReal::value() const {
  if (inf_ != 0) {
    throw DomainError("ExtendedReal::value called on " + to_string());
  }
  return value_;
}

double ExtendedReal::to_double() const {
  if (inf_ > 0) return HUGE_VAL;
  if (inf_ < 0) return -HUGE_VAL;
  return value_;
}

std::string ExtendedReal::to_string() const {
  if (inf_ > 0) return "+inf";
  if (inf_ < 0) return "-inf";
  std::ostringstream os;
  os.precision(17);
  os << value_;
  return os.str();
}

ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
  if (a.inf_ != 0 && b.inf_ != 0 && a.inf_ != b.inf_) {
    throw DomainError("ExtendedReal: +inf + -inf is undefined");
  }
  if (a.inf_ != 0) return a;
  if (b.inf_ != 0) return b;
  return ExtendedReal(a.value_ + b.value_);
}

ExtendedReal operator-(ExtendedReal a) {
  return ExtendedReal(-a.value_, -a.inf_);
}

std::partial_ordering operator<=>(ExtendedReal a, ExtendedReal b) {
  if (a.inf_ != b.inf_) return a.inf_ <=> b.inf_;
  if (a.inf_ != 0) return std::partial_ordering::equivalent;
  return a.value_ <=> b.value_;
}

bool operator==(ExtendedReal a, ExtendedReal b) {
  return (a <=> b) == std::partial_ordering::equivalent;
}

std::ostream& operator<<(std::ostream& os, ExtendedReal x) {
  return os << x.to_string();
}

}  // namespace superhedge

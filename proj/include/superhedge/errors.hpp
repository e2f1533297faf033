#pragma once

#include <stdexcept>
#include <string>

namespace superhedge {

/// Base for every error raised by the engine.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration fields.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Input outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Work would exceed a configured size budget.
class CapacityError : public Error {
public:
  using Error::Error;
};

/// Object built for a different tree shape.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Operation refused because a structural hypothesis does not hold.
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// A numerical contract was breached. Signals a bug, not user error.
class ContractViolation : public Error {
public:
  using Error::Error;
};

class InternalError : public Error {
public:
  using Error::Error;
};

}  // namespace superhedge

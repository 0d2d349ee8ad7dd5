#pragma once

#include <stdexcept>
#include <string>

namespace thetacg {

/// Vector length does not match the operator dimension.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition on the inputs does not hold.
class PreconditionViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The operation needs a capability (exact spectrum, integer power) the
/// operator or configuration does not provide.
class CapabilityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace thetacg

#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace wtrace {

/// Compact rendering of a number for error messages.
inline std::string brief(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched local dimensions, subsystem counts or out-of-range labels.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Attempt to normalize (or condition on) a state with zero norm.
class ZeroStateError : public Error {
 public:
  using Error::Error;
};

/// Dense expansion would exceed the configured amplitude budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// Evaluation time lies outside the evolution schedule.
class TimeRangeError : public Error {
 public:
  using Error::Error;
};

/// The postselected state is orthogonal to the evolved preselected state, so
/// the weak value ratio is undefined.
class VanishingOverlap : public Error {
 public:
  VanishingOverlap(double magnitude, double threshold)
      : Error("vanishing overlap |<phi|psi>| = " + brief(magnitude) + " below threshold " + brief(threshold)),
        magnitude_(magnitude) {}

  double magnitude() const noexcept { return magnitude_; }

 private:
  double magnitude_;
};

/// Malformed scenario document.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace wtrace

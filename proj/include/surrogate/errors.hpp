#pragma once

#include <stdexcept>
#include <string>

namespace surrogate {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Arm or trial parameters outside their admissible set.
class ParameterError : public Error {
public:
  using Error::Error;
};

// Which ratio denominator vanished.
enum class Denominator { ControlLate, ControlDeath };

inline const char* to_string(Denominator d) {
  return d == Denominator::ControlLate ? "control late-stage" : "control death";
}

class DegenerateDenominator : public Error {
public:
  explicit DegenerateDenominator(Denominator which)
      : Error(std::string("degenerate denominator: ") + to_string(which) + " rate is zero"),
        which_(which) {}

  Denominator which() const noexcept { return which_; }

private:
  Denominator which_;
};

// Raised after the resample budget of a simulated trial is exhausted.
class SimulationFailure : public Error {
public:
  using Error::Error;
};

// Regression slope is not identifiable (no variation in the regressor).
class NonIdentifiable : public Error {
public:
  using Error::Error;
};

class InsufficientData : public Error {
public:
  using Error::Error;
};

class DomainError : public Error {
public:
  using Error::Error;
};

class DegenerateRegion : public Error {
public:
  using Error::Error;
};

}  // namespace surrogate

#pragma once

// Two-arm screening trial model: conditional and joint parameterizations,
// the derived surrogate (late-stage incidence reduction) and primary
// (cancer mortality reduction) endpoints, and the built-in scenario registry.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "surrogate/errors.hpp"

namespace surrogate {

inline constexpr double kSumTolerance = 1e-12;

// Conditional parameterization of one arm.
struct ArmParams {
  double p_early = 0.0;        // P(early-stage diagnosis)
  double p_late = 0.0;         // P(late-stage diagnosis)
  double p_death_early = 0.0;  // P(cancer death | early-stage diagnosis)
  double p_death_late = 0.0;   // P(cancer death | late-stage diagnosis)

  // Marginal probability of cancer death.
  double p_death() const { return p_late * p_death_late + p_early * p_death_early; }

  friend bool operator==(const ArmParams&, const ArmParams&) = default;
};

struct TrialParams {
  ArmParams control;
  ArmParams screen;
  std::string label;

  friend bool operator==(const TrialParams&, const TrialParams&) = default;
};

// Joint (death j, diagnosis k) cell probabilities of one arm. The cell
// (death, no diagnosis) is impossible and not stored.
struct JointProbs {
  double p00 = 1.0;  // no death, no diagnosis
  double p01 = 0.0;  // no death, early stage
  double p11 = 0.0;  // death, early stage
  double p02 = 0.0;  // no death, late stage
  double p12 = 0.0;  // death, late stage

  double late() const { return p02 + p12; }
  double death() const { return p11 + p12; }
  double sum() const { return p00 + p01 + p11 + p02 + p12; }

  // Cells in sampling order (p00, p01, p11, p02, p12).
  std::array<double, 5> cells() const { return {p00, p01, p11, p02, p12}; }
};

struct EndpointPair {
  double S = 0.0;  // late-stage incidence reduction
  double M = 0.0;  // mortality reduction
};

struct ValidationResult {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  explicit operator bool() const { return ok(); }
};

namespace detail {

inline bool in_unit(double p) { return p >= 0.0 && p <= 1.0; }  // false for NaN

inline void check_arm(const ArmParams& a, const std::string& prefix, ValidationResult& out) {
  const std::pair<const char*, double> fields[] = {
      {"p_E", a.p_early},
      {"p_L", a.p_late},
      {"p_D_given_E", a.p_death_early},
      {"p_D_given_L", a.p_death_late},
  };
  for (const auto& [name, value] : fields) {
    if (!in_unit(value))
      out.violations.push_back(prefix + name + ": probability in [0,1] violated (" +
                               std::to_string(value) + ")");
  }
  if (in_unit(a.p_early) && in_unit(a.p_late) && a.p_early + a.p_late > 1.0 + kSumTolerance)
    out.violations.push_back(prefix + "p_E + p_L <= 1 violated (" +
                             std::to_string(a.p_early + a.p_late) + ")");
}

}  // namespace detail

inline ValidationResult validate(const ArmParams& arm) {
  ValidationResult out;
  detail::check_arm(arm, "", out);
  return out;
}

// Both arms valid and control denominators positive.
inline ValidationResult validate(const TrialParams& params) {
  ValidationResult out;
  detail::check_arm(params.control, "control.", out);
  detail::check_arm(params.screen, "screen.", out);
  if (out.ok()) {
    if (!(params.control.p_late > 0.0))
      out.violations.push_back("control.p_L > 0 violated (S undefined)");
    if (!(params.control.p_death() > 0.0))
      out.violations.push_back("control.p_D > 0 violated (M undefined)");
  }
  return out;
}

inline JointProbs to_joint(const ArmParams& arm) {
  if (auto v = validate(arm); !v) throw ParameterError("invalid arm: " + v.violations.front());
  JointProbs j;
  j.p00 = 1.0 - arm.p_early - arm.p_late;
  if (j.p00 < 0.0) j.p00 = 0.0;  // rounding at p_E + p_L == 1
  j.p01 = arm.p_early * (1.0 - arm.p_death_early);
  j.p11 = arm.p_early * arm.p_death_early;
  j.p02 = arm.p_late * (1.0 - arm.p_death_late);
  j.p12 = arm.p_late * arm.p_death_late;
  return j;
}

// Inverse map; conditional death probabilities of an empty stage are 0.
inline ArmParams to_conditional(const JointProbs& j) {
  ArmParams a;
  a.p_early = j.p01 + j.p11;
  a.p_late = j.p02 + j.p12;
  a.p_death_early = a.p_early > 0.0 ? j.p11 / a.p_early : 0.0;
  a.p_death_late = a.p_late > 0.0 ? j.p12 / a.p_late : 0.0;
  return a;
}

inline bool is_valid(const JointProbs& j) {
  for (double c : j.cells())
    if (!detail::in_unit(c)) return false;
  return std::abs(j.sum() - 1.0) <= kSumTolerance;
}

inline EndpointPair derive_endpoints(const TrialParams& params) {
  const ArmParams& c = params.control;
  const ArmParams& s = params.screen;
  if (auto v = validate(c); !v) throw ParameterError("invalid control arm: " + v.violations.front());
  if (auto v = validate(s); !v) throw ParameterError("invalid screen arm: " + v.violations.front());
  if (!(c.p_late > 0.0)) throw DegenerateDenominator(Denominator::ControlLate);
  const double pd_c = c.p_death();
  if (!(pd_c > 0.0)) throw DegenerateDenominator(Denominator::ControlDeath);
  return {1.0 - s.p_late / c.p_late, 1.0 - s.p_death() / pd_c};
}

// --- scenario registry ------------------------------------------------------

inline constexpr ArmParams kReferenceControl{0.010, 0.020, 0.10, 0.750};

// Screen-arm parameters exactly as printed (3 decimals). Scenarios 2 and 3
// do not reproduce their tabulated (S, M) under this rounding.
inline std::vector<TrialParams> printed_scenarios() {
  return {
      {kReferenceControl, {0.010, 0.020, 0.10, 0.750}, "Scenario 1"},
      {kReferenceControl, {0.012, 0.017, 0.28, 0.714}, "Scenario 2"},
      {kReferenceControl, {0.013, 0.017, 0.08, 0.714}, "Scenario 3"},
      {kReferenceControl, {0.010, 0.020, 0.10, 0.625}, "Scenario 4"},
  };
}

// Screen arms for Scenarios 2 and 3 inverted from their tabulated endpoints:
// p_L = 0.0175 gives S = 0.125, p_D|L = 5/7 keeps late-stage deaths at 0.0125.
inline std::vector<TrialParams> scenario_table() {
  constexpr double kLateDeath = 5.0 / 7.0;
  return {
      {kReferenceControl, {0.010, 0.020, 0.10, 0.750}, "Scenario 1"},
      {kReferenceControl, {0.0125, 0.0175, 0.28, kLateDeath}, "Scenario 2"},
      {kReferenceControl, {0.0125, 0.0175, 0.08, kLateDeath}, "Scenario 3"},
      {kReferenceControl, {0.010, 0.020, 0.10, 0.625}, "Scenario 4"},
  };
}

// Tabulated (S, M) per scenario, for fidelity checks.
inline constexpr std::array<EndpointPair, 4> kTabulatedEndpoints{{
    {0.0, 0.0},
    {0.125, 0.0},
    {0.125, 0.15625},
    {0.0, 0.15625},
}};

}  // namespace surrogate

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>

#include "surrogate/errors.hpp"
#include "surrogate/model.hpp"
#include "surrogate/rng.hpp"

namespace surrogate {

// Outcome counts of one arm over the five possible joint cells.
struct ArmCounts {
  std::int64_t n = 0;
  std::int64_t c00 = 0, c01 = 0, c11 = 0, c02 = 0, c12 = 0;

  std::int64_t late() const { return c02 + c12; }
  std::int64_t deaths() const { return c11 + c12; }
  std::int64_t total() const { return c00 + c01 + c11 + c02 + c12; }

  friend bool operator==(const ArmCounts&, const ArmCounts&) = default;
};

struct TrialCounts {
  ArmCounts control;
  ArmCounts screen;

  friend bool operator==(const TrialCounts&, const TrialCounts&) = default;
};

// Plug-in estimates of (S, M) and the four marginal rates behind them.
struct EndpointEstimate {
  double S_hat = 0.0;
  double M_hat = 0.0;
  std::int64_t n = 0;  // control arm size
  std::int64_t m = 0;  // screen arm size
  double p_late_control = 0.0;
  double p_late_screen = 0.0;
  double p_death_control = 0.0;
  double p_death_screen = 0.0;

  friend bool operator==(const EndpointEstimate&, const EndpointEstimate&) = default;
};

// Multinomial(n; p00, p01, p11, p02, p12) as conditional binomials in cell order.
inline ArmCounts sample_arm(const JointProbs& joint, std::int64_t n, Rng& rng) {
  if (n < 1) throw DomainError("sample_arm: n must be >= 1");
  if (!is_valid(joint)) throw ParameterError("sample_arm: joint probabilities invalid");

  const auto cells = joint.cells();
  std::array<std::int64_t, 5> counts{};
  std::int64_t remaining = n;
  for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
    double tail = 0.0;  // mass of cells i..4, summed directly to avoid 1 - p cancellation
    for (std::size_t j = i; j < cells.size(); ++j) tail += cells[j];
    const double p = tail > 0.0 ? std::min(1.0, cells[i] / tail) : 0.0;
    counts[i] = sample_binomial(remaining, p, rng);
    remaining -= counts[i];
  }
  counts[4] = remaining;
  return {n, counts[0], counts[1], counts[2], counts[3], counts[4]};
}

inline ArmCounts sample_arm(const JointProbs& joint, std::int64_t n, const SeedSpec& seed,
                            StreamTag tag = StreamTag::Control, std::uint64_t attempt = 0) {
  Rng rng(seed, tag, attempt);
  return sample_arm(joint, n, rng);
}

// Estimator from marginal counts only; this is all a published trial summary offers.
inline EndpointEstimate estimate_from_marginals(std::int64_t n, std::int64_t late_control,
                                                std::int64_t deaths_control, std::int64_t m,
                                                std::int64_t late_screen,
                                                std::int64_t deaths_screen) {
  if (n < 1 || m < 1) throw DomainError("arm sizes must be >= 1");
  if (late_control <= 0) throw DegenerateDenominator(Denominator::ControlLate);
  if (deaths_control <= 0) throw DegenerateDenominator(Denominator::ControlDeath);
  EndpointEstimate e;
  e.n = n;
  e.m = m;
  e.p_late_control = static_cast<double>(late_control) / static_cast<double>(n);
  e.p_late_screen = static_cast<double>(late_screen) / static_cast<double>(m);
  e.p_death_control = static_cast<double>(deaths_control) / static_cast<double>(n);
  e.p_death_screen = static_cast<double>(deaths_screen) / static_cast<double>(m);
  e.S_hat = 1.0 - e.p_late_screen / e.p_late_control;
  e.M_hat = 1.0 - e.p_death_screen / e.p_death_control;
  return e;
}

inline EndpointEstimate estimate_endpoints(const TrialCounts& counts) {
  const ArmCounts& c = counts.control;
  const ArmCounts& s = counts.screen;
  if (c.total() != c.n || s.total() != s.n)
    throw DomainError("estimate_endpoints: cell counts do not sum to arm size");
  return estimate_from_marginals(c.n, c.late(), c.deaths(), s.n, s.late(), s.deaths());
}

struct SimulatedTrial {
  EndpointEstimate estimate;
  TrialCounts counts;
  int resamples = 0;  // degenerate draws discarded before this one
};

inline constexpr int kMaxTrialAttempts = 100;

// Draws both arms from independent streams; a draw with a zero control
// denominator is redrawn from the next attempt's streams.
inline SimulatedTrial simulate_trial(const TrialParams& params, std::int64_t n, std::int64_t m,
                                     const SeedSpec& seed) {
  if (n < 1 || m < 1) throw DomainError("simulate_trial: arm sizes must be >= 1");
  if (auto v = validate(params); !v)
    throw ParameterError("simulate_trial: " + v.violations.front());
  const JointProbs jc = to_joint(params.control);
  const JointProbs js = to_joint(params.screen);

  for (int attempt = 0; attempt < kMaxTrialAttempts; ++attempt) {
    const auto a = static_cast<std::uint64_t>(attempt);
    TrialCounts counts{sample_arm(jc, n, seed, StreamTag::Control, a),
                       sample_arm(js, m, seed, StreamTag::Screen, a)};
    if (counts.control.late() == 0 || counts.control.deaths() == 0) continue;
    return {estimate_endpoints(counts), counts, attempt};
  }
  throw SimulationFailure("simulate_trial: " + std::to_string(kMaxTrialAttempts) +
                          " consecutive draws had a zero control denominator (" + params.label +
                          ", n=" + std::to_string(n) + ")");
}

}  // namespace surrogate

#pragma once

// Large-sample behaviour of the plug-in estimators (S_hat, M_hat).
//
// The joint cells are stacked as
//     p = (p11^C, p02^C, p12^C, p11^S, p02^S, p12^S)
// and g(p) = (S, M). All covariances are in sqrt(n)-standardized units with
// n the control arm size, so the finite-sample covariance is Sigma / n.

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "surrogate/errors.hpp"
#include "surrogate/model.hpp"
#include "surrogate/rng.hpp"

namespace surrogate {

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

inline Vector6 stack_cells(const JointProbs& control, const JointProbs& screen) {
  Vector6 p;
  p << control.p11, control.p02, control.p12, screen.p11, screen.p02, screen.p12;
  return p;
}

// g(p): (S, M) as a function of the stacked cells.
inline EndpointPair endpoints_from_cells(const Vector6& p) {
  const double late_c = p[1] + p[2];
  const double death_c = p[0] + p[2];
  if (!(late_c > 0.0)) throw DegenerateDenominator(Denominator::ControlLate);
  if (!(death_c > 0.0)) throw DegenerateDenominator(Denominator::ControlDeath);
  return {1.0 - (p[4] + p[5]) / late_c, 1.0 - (p[3] + p[5]) / death_c};
}

struct JointCovariance {
  Matrix6 sigma = Matrix6::Zero();
  double n_over_m = 1.0;
};

namespace detail {

// Multinomial covariance of the (p11, p02, p12) cell frequencies.
inline Eigen::Matrix3d cell_block(const JointProbs& j) {
  const Eigen::Vector3d q(j.p11, j.p02, j.p12);
  Eigen::Matrix3d block = -q * q.transpose();
  block.diagonal() += q;
  return block;
}

}  // namespace detail

inline JointCovariance joint_covariance(const JointProbs& control, const JointProbs& screen,
                                        double n, double m) {
  if (!(n >= 1.0) || !(m >= 1.0)) throw DomainError("joint_covariance: n, m must be >= 1");
  JointCovariance out;
  out.n_over_m = n / m;
  out.sigma.topLeftCorner<3, 3>() = detail::cell_block(control);
  out.sigma.bottomRightCorner<3, 3>() = out.n_over_m * detail::cell_block(screen);
  return out;
}

struct EndpointGradients {
  Vector6 grad_S = Vector6::Zero();
  Vector6 grad_M = Vector6::Zero();
  double r = 0.0;  // dS / d(control late cells), >= 0
  double s = 0.0;  // dS / d(screen late cells), < 0
  double t = 0.0;  // dM / d(control death cells), >= 0
  double u = 0.0;  // dM / d(screen death cells), < 0
};

// Partials of 1 - b/a: +b/a^2 in a, -1/a in b. Only the products r t and s u
// enter the cross covariance, so flipping all four signs would leave it unchanged.

inline EndpointGradients endpoint_gradients(const Vector6& p) {
  const double late_c = p[1] + p[2];
  const double death_c = p[0] + p[2];
  if (!(late_c > 0.0)) throw DegenerateDenominator(Denominator::ControlLate);
  if (!(death_c > 0.0)) throw DegenerateDenominator(Denominator::ControlDeath);

  EndpointGradients g;
  g.r = (p[4] + p[5]) / (late_c * late_c);
  g.s = -1.0 / late_c;
  g.t = (p[3] + p[5]) / (death_c * death_c);
  g.u = -1.0 / death_c;
  g.grad_S << 0.0, g.r, g.r, 0.0, g.s, g.s;
  g.grad_M << g.t, 0.0, g.t, g.u, 0.0, g.u;
  return g;
}

struct EndpointCovariance {
  double var_S = 0.0;
  double var_M = 0.0;
  double cov_SM = 0.0;
  std::optional<double> rho;  // empty when either variance is zero

  Eigen::Matrix2d matrix() const {
    Eigen::Matrix2d out;
    out << var_S, cov_SM, cov_SM, var_M;
    return out;
  }
};

// Delta method: grad g^T Sigma grad g.
inline EndpointCovariance endpoint_covariance(const TrialParams& params, double n, double m) {
  if (!(params.control.p_late > 0.0)) throw DegenerateDenominator(Denominator::ControlLate);
  if (!(params.control.p_death() > 0.0)) throw DegenerateDenominator(Denominator::ControlDeath);
  const JointProbs jc = to_joint(params.control);
  const JointProbs js = to_joint(params.screen);
  const Vector6 p = stack_cells(jc, js);
  const EndpointGradients g = endpoint_gradients(p);
  const Matrix6 sigma = joint_covariance(jc, js, n, m).sigma;

  EndpointCovariance out;
  out.var_S = g.grad_S.dot(sigma * g.grad_S);
  out.var_M = g.grad_M.dot(sigma * g.grad_M);
  out.cov_SM = g.grad_S.dot(sigma * g.grad_M);
  if (out.var_S > 0.0 && out.var_M > 0.0)
    out.rho = std::clamp(out.cov_SM / std::sqrt(out.var_S * out.var_M), -1.0, 1.0);
  return out;
}

// Closed-form decomposition of Cov(S_hat, M_hat) into per-arm terms
//     cov12 = A r t + B s u (n/m)
// with A = p12 p01 + p12 p00 - p11 p02 (control), B the same for screen.
// Whenever death is likelier after late than after early diagnosis, A, B > 0.
struct Theorem2Certificate {
  double A = 0.0;
  double B = 0.0;
  double rt = 0.0;
  double su = 0.0;
  double cov12 = 0.0;
  bool assumption_holds = false;

  // True when the assumption holds and every sign claim is met.
  bool certified() const { return assumption_holds && A > 0.0 && B > 0.0 && cov12 > 0.0; }
};

inline double stage_lethality_term(const JointProbs& j) {
  return j.p12 * j.p01 + j.p12 * j.p00 - j.p11 * j.p02;
}

inline bool stage_lethality_ordered(const TrialParams& params) {
  return params.control.p_death_early < params.control.p_death_late &&
         params.screen.p_death_early < params.screen.p_death_late;
}

inline Theorem2Certificate theorem2_certificate(const TrialParams& params, double n, double m) {
  if (!(n >= 1.0) || !(m >= 1.0)) throw DomainError("theorem2_certificate: n, m must be >= 1");
  const JointProbs jc = to_joint(params.control);
  const JointProbs js = to_joint(params.screen);
  const EndpointGradients g = endpoint_gradients(stack_cells(jc, js));

  Theorem2Certificate c;
  c.A = stage_lethality_term(jc);
  c.B = stage_lethality_term(js);
  c.rt = g.r * g.t;
  c.su = g.s * g.u;
  c.cov12 = c.A * c.rt + c.B * c.su * (n / m);
  c.assumption_holds = stage_lethality_ordered(params);
  return c;
}

struct MarginalVariances {
  double var_S = 0.0;
  double var_M = 0.0;
};

// Delta-method variance of 1 - b/a for independent binomial rates a (control,
// size n) and b (screen, size m), in sqrt(n) units:
//     (b^2 / a^4) a(1-a) + (n/m) (1 / a^2) b(1-b)
inline double ratio_reduction_variance(double control_rate, double screen_rate, double n_over_m) {
  const double a = control_rate;
  const double b = screen_rate;
  return (b * b) / (a * a * a * a) * a * (1.0 - a) + n_over_m / (a * a) * b * (1.0 - b);
}

inline MarginalVariances marginal_variances(double p_late_control, double p_late_screen,
                                            double p_death_control, double p_death_screen,
                                            double n, double m) {
  if (!(p_late_control > 0.0)) throw DegenerateDenominator(Denominator::ControlLate);
  if (!(p_death_control > 0.0)) throw DegenerateDenominator(Denominator::ControlDeath);
  if (!(n >= 1.0) || !(m >= 1.0)) throw DomainError("marginal_variances: n, m must be >= 1");
  return {ratio_reduction_variance(p_late_control, p_late_screen, n / m),
          ratio_reduction_variance(p_death_control, p_death_screen, n / m)};
}

// --- random parameter draws -------------------------------------------------

enum class StageLethality {
  Ordered,   // p_D|E < p_D|L in both arms
  Reversed,  // p_D|E > p_D|L in both arms
};

// p_E, p_L ~ U(0.001, 0.1) with p_E + p_L < 0.15; conditional death
// probabilities ~ U(0, 1) subject to the requested ordering.
inline ArmParams draw_arm(Rng& rng, StageLethality order) {
  ArmParams a;
  do {
    a.p_early = rng.uniform(0.001, 0.1);
    a.p_late = rng.uniform(0.001, 0.1);
  } while (a.p_early + a.p_late >= 0.15);
  double lo, hi;
  do {
    lo = rng.uniform();
    hi = rng.uniform();
    if (lo > hi) std::swap(lo, hi);
  } while (!(lo < hi));
  a.p_death_early = order == StageLethality::Ordered ? lo : hi;
  a.p_death_late = order == StageLethality::Ordered ? hi : lo;
  return a;
}

inline TrialParams draw_trial(Rng& rng, StageLethality order) {
  TrialParams t;
  t.control = draw_arm(rng, order);
  t.screen = draw_arm(rng, order);
  t.label = "random";
  return t;
}

}  // namespace surrogate

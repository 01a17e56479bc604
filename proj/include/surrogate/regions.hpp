#pragma once

// Wald confidence regions for a trial's (S, M) pair.

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "surrogate/errors.hpp"
#include "surrogate/sampling.hpp"

namespace surrogate {

// (1 - alpha) quantile of chi-squared with 2 df (an exponential with mean 2).
inline double chi2_quantile_2df(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("chi2_quantile_2df: alpha must be in (0,1)");
  return -2.0 * std::log(alpha);
}

inline Eigen::Matrix2d assemble_sigma(double var_S, double var_M, double rho) {
  if (!(var_S >= 0.0) || !(var_M >= 0.0)) throw DomainError("assemble_sigma: negative variance");
  if (!(std::abs(rho) <= 1.0)) throw DomainError("assemble_sigma: |rho| must be <= 1");
  const double off = rho * std::sqrt(var_S * var_M);
  Eigen::Matrix2d out;
  out << var_S, off, off, var_M;
  return out;
}

struct WaldRegion {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();  // (S_hat, M_hat)
  Eigen::Matrix2d shape = Eigen::Matrix2d::Identity();  // finite-sample covariance
  double threshold = 0.0;
  double alpha = 0.1;
  double rho_used = 0.0;
  bool low_count = false;  // nominal coverage doubtful

  double mahalanobis2(const Eigen::Vector2d& point) const {
    const Eigen::Vector2d d = point - center;
    return d.dot(shape.ldlt().solve(d));
  }

  double area() const { return std::numbers::pi * threshold * std::sqrt(shape.determinant()); }
};

inline WaldRegion make_region(const Eigen::Vector2d& center, const Eigen::Matrix2d& shape,
                              double alpha, double rho_used = 0.0) {
  if (!(shape(0, 0) > 0.0) || !(shape(1, 1) > 0.0) || !(shape.determinant() > 0.0))
    throw DegenerateRegion("region covariance is singular");
  WaldRegion region;
  region.center = center;
  region.shape = shape;
  region.alpha = alpha;
  region.threshold = chi2_quantile_2df(alpha);
  region.rho_used = rho_used;
  return region;
}

// Variances are in sqrt(n) units (n = control arm size) and are divided by n here.
inline WaldRegion wald_region(const EndpointEstimate& est, double var_S, double var_M, double rho,
                              double alpha) {
  if (!(std::abs(rho) < 1.0)) throw DegenerateRegion("wald_region: |rho| must be < 1");
  if (!(var_S > 0.0) || !(var_M > 0.0)) throw DegenerateRegion("wald_region: zero variance");
  if (est.n < 1) throw DomainError("wald_region: estimate has no control arm size");
  const double n = static_cast<double>(est.n);
  return make_region({est.S_hat, est.M_hat}, assemble_sigma(var_S, var_M, rho) / n, alpha, rho);
}

inline bool region_contains(const WaldRegion& region, const Eigen::Vector2d& point) {
  return region.mahalanobis2(point) < region.threshold;
}

// Whether the region meets the line {coordinate axis == value}; axis 0 is S, 1 is M.
// Minimizing the quadratic form over the free coordinate leaves d^2 / shape(axis, axis).
inline bool region_meets_line(const WaldRegion& region, int axis, double value) {
  const double d = value - region.center[axis];
  return d * d / region.shape(axis, axis) < region.threshold;
}

struct BoundaryPoint {
  double theta = 0.0;
  double S = 0.0;
  double M = 0.0;
};

// center + sqrt(threshold) L (cos theta, sin theta) with L L^T = shape.
inline std::vector<BoundaryPoint> ellipse_boundary(const WaldRegion& region, int k) {
  if (k < 4) throw DomainError("ellipse_boundary: need at least 4 points");
  const Eigen::LLT<Eigen::Matrix2d> llt(region.shape);
  if (llt.info() != Eigen::Success) throw DegenerateRegion("ellipse_boundary: shape not positive definite");
  const Eigen::Matrix2d L = llt.matrixL();
  const double radius = std::sqrt(region.threshold);

  std::vector<BoundaryPoint> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const double theta = 2.0 * std::numbers::pi * i / k;
    const Eigen::Vector2d p = region.center + radius * L * Eigen::Vector2d(std::cos(theta), std::sin(theta));
    out.push_back({theta, p[0], p[1]});
  }
  return out;
}

// Angle of the major axis from the S axis, in (-pi/2, pi/2].
inline double principal_axis_angle(const WaldRegion& region) {
  const Eigen::Matrix2d& s = region.shape;
  return 0.5 * std::atan2(2.0 * s(0, 1), s(0, 0) - s(1, 1));
}

}  // namespace surrogate

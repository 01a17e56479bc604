#pragma once

// Meta-analytic regression of trial-level primary effects on surrogate
// effects: ordinary (optionally weighted) least squares, the t-test of a zero
// slope, and the Pearson correlation with a Fisher-z interval.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "surrogate/errors.hpp"

namespace surrogate {

struct DataPoint {
  double x = 0.0;  // surrogate effect (S or S_hat)
  double y = 0.0;  // primary effect (M or M_hat)
};

// Upper tail P(T > t) of Student's t with df degrees of freedom.
inline double student_t_sf(double t, double df) {
  if (!(df >= 1.0)) throw DomainError("student_t_sf: df must be >= 1");
  if (std::isnan(t)) return t;
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double x = df / (df + t * t);
  const double tail = 0.5 * boost::math::ibeta(0.5 * df, 0.5, x);
  return t > 0 ? tail : 1.0 - tail;
}

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must be in (0,1)");
  return std::sqrt(2.0) * boost::math::erf_inv(2.0 * p - 1.0);
}

struct CorrelationInterval {
  double r = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

namespace detail {

struct Moments {
  double mean_x = 0.0, mean_y = 0.0;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
};

// Two-pass weighted central moments; weights of 1 when w is empty.
inline Moments moments(std::span<const DataPoint> pts, std::span<const double> w) {
  Moments m;
  double wsum = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    wsum += wi;
    m.mean_x += wi * pts[i].x;
    m.mean_y += wi * pts[i].y;
  }
  m.mean_x /= wsum;
  m.mean_y /= wsum;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    const double dx = pts[i].x - m.mean_x;
    const double dy = pts[i].y - m.mean_y;
    m.sxx += wi * dx * dx;
    m.syy += wi * dy * dy;
    m.sxy += wi * dx * dy;
  }
  return m;
}

inline bool constant_x(std::span<const DataPoint> pts) {
  for (const auto& p : pts)
    if (p.x != pts.front().x) return false;
  return true;
}

inline CorrelationInterval fisher_interval(double r, std::size_t count, double level) {
  const double z = std::atanh(r);
  const double half = normal_quantile(0.5 * (1.0 + level)) / std::sqrt(double(count) - 3.0);
  return {r, std::tanh(z - half), std::tanh(z + half)};
}

}  // namespace detail

inline CorrelationInterval pearson_ci(std::span<const DataPoint> pts, double level = 0.95) {
  if (pts.size() < 4) throw InsufficientData("pearson_ci: at least 4 pairs required");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("pearson_ci: level must be in (0,1)");
  const auto m = detail::moments(pts, {});
  if (!(m.sxx > 0.0) || !(m.syy > 0.0))
    throw NonIdentifiable("pearson_ci: zero variance in x or y");
  const double r = std::clamp(m.sxy / std::sqrt(m.sxx * m.syy), -1.0, 1.0);
  return detail::fisher_interval(r, pts.size(), level);
}

struct MetaFit {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double se_beta1 = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;  // two-sided, H0: beta1 = 0
  int df = 0;
  std::optional<double> r_pearson;                // absent when y has no variation
  std::optional<std::pair<double, double>> r_ci;  // needs >= 4 pairs
  double ci_level = 0.95;
  std::vector<double> residuals;
  bool weighted = false;

  bool rejects(double alpha) const { return p_value < alpha; }
};

// Minimizes sum w_l (y_l - b0 - b1 x_l)^2. Weights, when given, are
// normalized to sum to the number of pairs.
inline MetaFit ols_fit(std::span<const DataPoint> pts, std::span<const double> weights = {},
                       double ci_level = 0.95) {
  const std::size_t count = pts.size();
  if (count < 3) throw InsufficientData("ols_fit: at least 3 pairs required");
  if (!weights.empty() && weights.size() != count)
    throw DomainError("ols_fit: weight count does not match pair count");
  if (detail::constant_x(pts))
    throw NonIdentifiable("ols_fit: all x values identical, slope not identifiable");

  MetaFit fit;
  fit.weighted = !weights.empty();
  fit.ci_level = ci_level;

  std::vector<double> w;
  if (fit.weighted) {
    bool equal = true;
    double total = 0.0;
    for (double wi : weights) {
      if (!(wi > 0.0) || !std::isfinite(wi)) throw DomainError("ols_fit: weights must be positive");
      equal = equal && wi == weights.front();
      total += wi;
    }
    if (!equal) {
      w.reserve(count);
      for (double wi : weights) w.push_back(wi * static_cast<double>(count) / total);
    }
  }

  const auto mo = detail::moments(pts, w);
  if (!(mo.sxx > 0.0)) throw NonIdentifiable("ols_fit: zero spread in x");
  fit.beta1 = mo.sxy / mo.sxx;
  fit.beta0 = mo.mean_y - fit.beta1 * mo.mean_x;
  fit.df = static_cast<int>(count) - 2;

  double rss = 0.0;
  fit.residuals.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double e = pts[i].y - fit.beta0 - fit.beta1 * pts[i].x;
    fit.residuals.push_back(e);
    rss += (w.empty() ? 1.0 : w[i]) * e * e;
  }
  fit.se_beta1 = std::sqrt(rss / fit.df / mo.sxx);

  if (fit.se_beta1 > 0.0) {
    fit.t_stat = fit.beta1 / fit.se_beta1;
    fit.p_value = 2.0 * student_t_sf(std::abs(fit.t_stat), fit.df);
  } else if (fit.beta1 != 0.0) {
    fit.t_stat = std::copysign(INFINITY, fit.beta1);
    fit.p_value = 0.0;
  }

  if (mo.syy > 0.0) {
    const double r = std::clamp(mo.sxy / std::sqrt(mo.sxx * mo.syy), -1.0, 1.0);
    fit.r_pearson = r;
    if (count >= 4) {
      const auto ci = detail::fisher_interval(r, count, ci_level);
      fit.r_ci = std::make_pair(ci.lo, ci.hi);
    }
  }
  return fit;
}

inline MetaFit ols_fit(const std::vector<DataPoint>& pts, const std::vector<double>& weights = {},
                       double ci_level = 0.95) {
  return ols_fit(std::span<const DataPoint>(pts), std::span<const double>(weights), ci_level);
}

}  // namespace surrogate

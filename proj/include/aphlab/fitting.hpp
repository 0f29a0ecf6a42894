#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "aphlab/errors.hpp"

namespace aphlab {

/// Ordinary least squares on (log x, log y). residual is the RMS of the
/// log-residuals (natural log), a dimensionless scatter measure.
struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
  bool degenerate = false;  // some y <= 0, or fewer than 2 points
};

inline LogLogFit loglog_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  LogLogFit fit;
  if (xs.size() != ys.size() || xs.size() < 2) {
    fit.degenerate = true;
    return fit;
  }
  for (double y : ys)
    if (!(y > 0)) {
      fit.degenerate = true;
      return fit;
    }
  const size_t n = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    const double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double det = n * sxx - sx * sx;
  if (std::fabs(det) < 1e-300) {
    fit.degenerate = true;
    return fit;
  }
  fit.slope = (n * sxy - sx * sy) / det;
  fit.intercept = (sy * sxx - sx * sxy) / det;
  double ss = 0;
  for (size_t i = 0; i < n; ++i) {
    const double r = std::log(ys[i]) - (fit.slope * std::log(xs[i]) + fit.intercept);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

/// Decay exponent of rho(L,L) ~ L^{-theta}. All-zero tables give the +inf sentinel.
struct ThetaFit {
  double theta_hat = 0.0;
  double residual = 0.0;
  bool is_infinite = false;
};

inline ThetaFit fit_theta(const std::vector<double>& L_list, const std::vector<double>& rho_values,
                          double zero_tol = 1e-10) {
  ThetaFit tf;
  double mx = 0;
  for (double r : rho_values) mx = std::max(mx, r);
  if (mx <= zero_tol) {
    tf.is_infinite = true;
    tf.theta_hat = std::numeric_limits<double>::infinity();
    return tf;
  }
  // drop exactly-dead points (periodic shifts found), fit the rest
  std::vector<double> xs, ys;
  for (size_t i = 0; i < L_list.size(); ++i)
    if (rho_values[i] > zero_tol) {
      xs.push_back(L_list[i]);
      ys.push_back(rho_values[i]);
    }
  if (xs.size() < 2) {
    tf.is_infinite = true;
    tf.theta_hat = std::numeric_limits<double>::infinity();
    return tf;
  }
  auto fit = loglog_fit(xs, ys);
  tf.theta_hat = -fit.slope;
  tf.residual = fit.residual;
  return tf;
}

}  // namespace aphlab

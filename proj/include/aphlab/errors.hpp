#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace aphlab {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error("config: " + msg) {}
};

struct ShapeMismatch : std::runtime_error {
  explicit ShapeMismatch(const std::string& msg) : std::runtime_error("shape mismatch: " + msg) {}
};

namespace detail {
inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}
}  // namespace detail

/// CG hit max_iter (or the double-precision residual floor) before rel_tol.
struct NonConvergence : std::runtime_error {
  int iterations;
  double residual;
  NonConvergence(int it, double res)
      : std::runtime_error("solver did not converge after " + std::to_string(it) +
                           " iterations, residual " + detail::sci(res)),
        iterations(it), residual(res) {}
};

/// A direction of non-positive curvature appeared inside CG.
struct IndefiniteDetected : std::runtime_error {
  IndefiniteDetected() : std::runtime_error("operator is not positive definite") {}
};

struct ResolutionTooCoarse : std::runtime_error {
  ResolutionTooCoarse(double eps, double h)
      : std::runtime_error("grid spacing h=" + std::to_string(h) +
                           " does not resolve eps=" + std::to_string(eps) + " (need h <= eps/16)") {}
};

struct KernelUnderresolved : std::runtime_error {
  KernelUnderresolved(double eps, double h)
      : std::runtime_error("mollifier width eps=" + std::to_string(eps) +
                           " underresolved by h=" + std::to_string(h) + " (need eps >= 2h)") {}
};

struct SupportViolation : std::runtime_error {
  explicit SupportViolation(const std::string& msg) : std::runtime_error("support violation: " + msg) {}
};

struct AdmissibilityLost : std::runtime_error {
  explicit AdmissibilityLost(const std::string& msg) : std::runtime_error("inadmissible field: " + msg) {}
};

}  // namespace aphlab

#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "aphlab/errors.hpp"
#include "aphlab/multi_index.hpp"
#include "aphlab/small_eigen.hpp"

namespace aphlab {

/// An evaluable tensor-valued field on R^d. `eval` writes `entries` doubles.
struct TensorFieldFn {
  int d = 1;
  int entries = 1;
  std::function<void(const double* y, double* out)> eval;

  double eval_scalar(const double* y) const {
    double v;
    eval(y, &v);
    return v;
  }
};

/// One trigonometric mode: amp * cos(freq . y + phase), amp a flat (alpha,beta,i,j) tensor.
struct CoeffMode {
  std::vector<double> freq;
  double phase = 0.0;
  std::vector<double> amp;
};

/// Coefficient tensor A(y) = constant_part + sum_k amp_k cos(xi_k . y + phi_k),
/// optionally plus a non-trigonometric additive term (used for decaying perturbations).
/// Tensor entries are stored flat, row-major over (alpha, beta, i, j), with
/// multi-indices of order m enumerated lexicographically on exponent tuples.
struct CoeffField {
  int d = 1, m = 1, n = 1;
  double mu = 1.0;
  std::vector<double> constant_part;
  std::vector<CoeffMode> modes;
  std::function<void(const double* y, double* out)> extra;  // additive, may be empty
  std::string id = "field";

  std::vector<MultiIndex> alphas() const { return MultiIndex::all_of_order(d, m); }
  int mbar() const { return count_of_order(d, m); }
  int entries() const {
    int mb = mbar();
    return mb * mb * n * n;
  }
  int idx(int a, int b, int i, int j) const {
    int mb = mbar();
    return ((a * mb + b) * n + i) * n + j;
  }
  bool is_trig() const { return !extra; }

  void validate() const {
    if (mu <= 0) throw AdmissibilityLost("mu must be positive");
    if (static_cast<int>(constant_part.size()) != entries())
      throw ShapeMismatch("constant_part has " + std::to_string(constant_part.size()) +
                          " entries, expected " + std::to_string(entries()));
    for (const auto& mo : modes) {
      if (static_cast<int>(mo.freq.size()) != d) throw ShapeMismatch("mode frequency dimension");
      if (static_cast<int>(mo.amp.size()) != entries()) throw ShapeMismatch("mode amplitude entries");
    }
  }

  void eval(const double* y, double* out) const {
    const int ne = entries();
    for (int e = 0; e < ne; ++e) out[e] = constant_part[e];
    for (const auto& mo : modes) {
      double arg = mo.phase;
      for (int k = 0; k < d; ++k) arg += mo.freq[k] * y[k];
      const double c = std::cos(arg);
      for (int e = 0; e < ne; ++e) out[e] += mo.amp[e] * c;
    }
    if (extra) {
      std::vector<double> tmp(ne);
      extra(y, tmp.data());
      for (int e = 0; e < ne; ++e) out[e] += tmp[e];
    }
  }

  TensorFieldFn as_fn() const {
    TensorFieldFn f;
    f.d = d;
    f.entries = entries();
    CoeffField copy = *this;
    f.eval = [copy](const double* y, double* out) { copy.eval(y, out); };
    return f;
  }

  /// Exact translation A(. + y): trig modes shift by phase, extra by argument.
  CoeffField translated(const std::vector<double>& y) const {
    CoeffField t = *this;
    for (auto& mo : t.modes) {
      for (int k = 0; k < d; ++k) mo.phase += mo.freq[k] * y[k];
    }
    if (extra) {
      auto base = extra;
      std::vector<double> shift = y;
      int dim = d;
      t.extra = [base, shift, dim](const double* x, double* out) {
        std::vector<double> p(dim);
        for (int k = 0; k < dim; ++k) p[k] = x[k] + shift[k];
        base(p.data(), out);
      };
    }
    return t;
  }

  /// Exact mean value per entry (trig path: the constant term).
  std::vector<double> exact_mean() const {
    if (!is_trig()) throw ConfigError("exact_mean requires a pure trigonometric field");
    return constant_part;
  }

  /// Constant scalar field helper (n=1), A = c for every |alpha|=|beta|=m pair
  /// on the diagonal alpha==beta.
  static CoeffField constant_identity(int d, int m, int n, double c, double mu) {
    CoeffField f;
    f.d = d;
    f.m = m;
    f.n = n;
    f.mu = mu;
    int mb = f.mbar();
    f.constant_part.assign(f.entries(), 0.0);
    for (int a = 0; a < mb; ++a)
      for (int i = 0; i < n; ++i) f.constant_part[f.idx(a, a, i, i)] = c;
    f.id = "const" + std::to_string(c) + "_d" + std::to_string(d) + "m" + std::to_string(m);
    return f;
  }

  /// d=1 scalar field a(y) = c0 + sum_k amps[k] cos(freqs[k] y + phases[k]).
  static CoeffField scalar_1d(int m, double c0, const std::vector<double>& amps,
                              const std::vector<double>& freqs, const std::vector<double>& phases,
                              double mu, const std::string& name) {
    CoeffField f;
    f.d = 1;
    f.m = m;
    f.n = 1;
    f.mu = mu;
    f.constant_part = {c0};
    for (size_t k = 0; k < amps.size(); ++k) {
      CoeffMode mo;
      mo.freq = {freqs[k]};
      mo.phase = phases.size() > k ? phases[k] : 0.0;
      mo.amp = {amps[k]};
      f.modes.push_back(mo);
    }
    f.id = name;
    return f;
  }
};

/// Difference operator: x -> A(x+y) - A(x+z). Exact for trig fields.
inline TensorFieldFn delta_yz(const CoeffField& field, const std::vector<double>& y,
                              const std::vector<double>& z) {
  CoeffField fy = field.translated(y);
  CoeffField fz = field.translated(z);
  TensorFieldFn f;
  f.d = field.d;
  f.entries = field.entries();
  f.eval = [fy, fz](const double* x, double* out) {
    const int ne = fy.entries();
    std::vector<double> b(ne);
    fy.eval(x, out);
    fz.eval(x, b.data());
    for (int e = 0; e < ne; ++e) out[e] -= b[e];
  };
  return f;
}

struct AdmissibilityReport {
  bool bound_ok = false;
  bool coercive_ok = false;
  double min_eigen = 0.0;
  double max_abs = 0.0;
};

/// Pointwise sufficient check on a sample grid over [0, box]^d: sup-norm bound
/// |A| <= 1/mu and smallest eigenvalue of the symmetrized form >= mu.
inline AdmissibilityReport check_admissible(const CoeffField& field, int samples_per_dim = 64,
                                            double box = 8.0) {
  field.validate();
  const int d = field.d, n = field.n, mb = field.mbar();
  const int dim = mb * n;
  AdmissibilityReport rep;
  rep.min_eigen = 1e300;
  std::vector<double> A(field.entries());
  std::vector<double> Q(dim * dim);
  std::vector<double> y(d, 0.0);
  long total = 1;
  for (int k = 0; k < d; ++k) total *= samples_per_dim;
  for (long s = 0; s < total; ++s) {
    long t = s;
    for (int k = 0; k < d; ++k) {
      y[k] = box * double(t % samples_per_dim) / samples_per_dim;
      t /= samples_per_dim;
    }
    field.eval(y.data(), A.data());
    for (double v : A) rep.max_abs = std::max(rep.max_abs, std::fabs(v));
    // Q[(a,i),(b,j)] = sym part of A^{ab}_{ij}
    for (int a = 0; a < mb; ++a)
      for (int i = 0; i < n; ++i)
        for (int b = 0; b < mb; ++b)
          for (int j = 0; j < n; ++j) {
            double v = 0.5 * (A[field.idx(a, b, i, j)] + A[field.idx(b, a, j, i)]);
            Q[(a * n + i) * dim + (b * n + j)] = v;
          }
    rep.min_eigen = std::min(rep.min_eigen, smallest_eigenvalue_sym(Q, dim));
  }
  rep.bound_ok = rep.max_abs <= 1.0 / field.mu + 1e-12;
  rep.coercive_ok = rep.min_eigen >= field.mu - 1e-12;
  return rep;
}

/// A + b(y)/(1+|y|) with b a trig tensor field; the canonical decaying perturbation.
inline CoeffField perturbed_field(const CoeffField& base, const CoeffField& bump) {
  if (bump.d != base.d || bump.m != base.m || bump.n != base.n)
    throw ShapeMismatch("perturbation bump shape");
  CoeffField f = base;
  CoeffField b = bump;
  int d = base.d;
  f.extra = [b, d](const double* y, double* out) {
    b.eval(y, out);
    double r2 = 0;
    for (int k = 0; k < d; ++k) r2 += y[k] * y[k];
    const double w = 1.0 / (1.0 + std::sqrt(r2));
    for (int e = 0; e < b.entries(); ++e) out[e] *= w;
  };
  f.mu = base.mu / 2;
  f.id = base.id + "+decay(" + bump.id + ")";
  return f;
}

}  // namespace aphlab

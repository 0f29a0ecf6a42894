#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "aphlab/errors.hpp"
#include "aphlab/fd_ops.hpp"
#include "aphlab/grid.hpp"

namespace aphlab {

struct SolverConfig {
  double rel_tol = 1e-9;
  int max_iter = 200000;
  enum class Prec { none, diagonal, symbol } prec = Prec::diagonal;
  bool deflate_mean = false;  // keep iterates in the mean-zero subspace

  void validate() const {
    if (!(rel_tol > 0 && rel_tol < 1)) throw ConfigError("rel_tol must be in (0,1)");
    if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
  }
};

struct SolveReport {
  int iterations = 0;
  double rel_residual = 0.0;
  double rhs_norm = 0.0;
  bool converged = false;
};

using OpFn = std::function<GridField(const GridField&)>;
using PrecFn = std::function<void(GridField&)>;  // in place: r <- M^{-1} r

namespace detail {

inline void subtract_mean(GridField& u) {
  auto m = grid_mean(u);
  const long N = u.grid.num_nodes();
  for (long p = 0; p < N; ++p)
    for (int c = 0; c < u.components; ++c) u.at(p, c) -= m[c];
}

}  // namespace detail

/// Preconditioned conjugate gradients. Returns u with ||op(u)-rhs|| / ||rhs|| <= rel_tol
/// (Euclidean norms; the contract is checked on the true residual). Throws
/// NonConvergence past max_iter and IndefiniteDetected on non-positive curvature.
inline GridField solve_spd(const OpFn& op, const GridField& rhs, const SolverConfig& cfg,
                           const PrecFn& prec = nullptr, SolveReport* report = nullptr) {
  cfg.validate();
  GridField b = rhs;
  if (cfg.deflate_mean) detail::subtract_mean(b);
  const double bnorm = std::sqrt(dot(b, b));
  SolveReport rep;
  rep.rhs_norm = bnorm;
  GridField x(b.grid, b.components);
  if (bnorm == 0.0) {
    rep.converged = true;
    if (report) *report = rep;
    return x;  // exact zero solution
  }
  GridField r = b;
  GridField z = r;
  if (prec) prec(z);
  if (cfg.deflate_mean) detail::subtract_mean(z);
  GridField p = z;
  double rz = dot(r, z);
  double rnorm = std::sqrt(dot(r, r));
  int restarts = 0;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    GridField Ap = op(p);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0)) throw IndefiniteDetected();
    const double alpha = rz / pAp;
    for (size_t i = 0; i < x.values.size(); ++i) {
      x.values[i] += alpha * p.values[i];
      r.values[i] -= alpha * Ap.values[i];
    }
    rnorm = std::sqrt(dot(r, r));
    rep.iterations = it;
    rep.rel_residual = rnorm / bnorm;
    if (rep.rel_residual <= cfg.rel_tol) {
      // the recurred residual can drift from b - op(x); the contract is on the true one
      GridField rt = b;
      GridField Ax = op(x);
      rt -= Ax;
      if (cfg.deflate_mean) detail::subtract_mean(rt);
      const double true_rel = std::sqrt(dot(rt, rt)) / bnorm;
      rep.rel_residual = true_rel;
      if (true_rel <= cfg.rel_tol) {
        rep.converged = true;
        if (cfg.deflate_mean) detail::subtract_mean(x);
        if (report) *report = rep;
        return x;
      }
      if (++restarts > 3) {
        if (report) *report = rep;
        throw NonConvergence(it, true_rel);
      }
      r = rt;  // restart from the true residual with a fresh direction
      z = r;
      if (prec) prec(z);
      if (cfg.deflate_mean) detail::subtract_mean(z);
      p = z;
      rz = dot(r, z);
      continue;
    }
    z = r;
    if (prec) prec(z);
    if (cfg.deflate_mean) detail::subtract_mean(z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (size_t i = 0; i < p.values.size(); ++i) p.values[i] = z.values[i] + beta * p.values[i];
  }
  if (report) *report = rep;
  throw NonConvergence(cfg.max_iter, rnorm / bnorm);
}

/// Diagonal of the assembled 2m-order operator (plus t_pow), for Prec::diagonal.
inline GridField operator_diagonal(const GridField& A_samples, int m, int n, double t_pow) {
  const TorusGrid& g = A_samples.grid;
  const auto alphas = MultiIndex::all_of_order(g.d, m);
  const int mb = static_cast<int>(alphas.size());
  const long N = g.num_nodes();
  const double hm = std::pow(g.h(), m);

  // forward-difference stencil weights over the offset box [0..m]^d
  std::vector<int> offsets;      // flattened offsets per stencil point
  std::vector<std::vector<double>> w(mb);  // weight per alpha per stencil point
  std::vector<int> box(g.d, m + 1);
  long box_n = 1;
  for (int k = 0; k < g.d; ++k) box_n *= (m + 1);
  auto binom = [](int a, int s) {
    double c = 1;
    for (int t = 0; t < s; ++t) c = c * (a - t) / (t + 1);
    return c;
  };
  std::vector<std::vector<int>> offs(box_n, std::vector<int>(g.d));
  for (long q = 0; q < box_n; ++q) {
    long t = q;
    for (int k = g.d - 1; k >= 0; --k) {
      offs[q][k] = static_cast<int>(t % (m + 1));
      t /= (m + 1);
    }
  }
  for (int a = 0; a < mb; ++a) {
    w[a].assign(box_n, 0.0);
    for (long q = 0; q < box_n; ++q) {
      double weight = 1.0;
      bool ok = true;
      for (int k = 0; k < g.d; ++k) {
        int ak = alphas[a].entries[k], sk = offs[q][k];
        if (sk > ak) {
          ok = false;
          break;
        }
        weight *= binom(ak, sk) * (((ak - sk) % 2) ? -1.0 : 1.0);
      }
      w[a][q] = ok ? weight / hm : 0.0;
    }
  }

  GridField diag(g, n);
  int j[4];
  for (long p = 0; p < N; ++p) {
    g.coords(p, j);
    for (long q = 0; q < box_n; ++q) {
      // node p - s with wrap
      long node = 0;
      for (int k = 0; k < g.d; ++k) {
        int jj = j[k] - offs[q][k];
        jj = ((jj % g.n_per_dim) + g.n_per_dim) % g.n_per_dim;
        node += static_cast<long>(jj) * g.stride(k);
      }
      const double* Ap = &A_samples.values[node * A_samples.components];
      for (int a = 0; a < mb; ++a) {
        if (w[a][q] == 0.0) continue;
        for (int b = 0; b < mb; ++b) {
          if (w[b][q] == 0.0) continue;
          const double ww = w[a][q] * w[b][q];
          for (int i = 0; i < n; ++i) diag.at(p, i) += ww * Ap[((a * mb + b) * n + i) * n + i];
        }
      }
    }
    for (int i = 0; i < n; ++i) diag.at(p, i) += t_pow;
  }
  return diag;
}

inline PrecFn make_diagonal_prec(GridField diag) {
  for (auto& v : diag.values) v = (std::fabs(v) > 0) ? 1.0 / v : 1.0;
  return [diag](GridField& r) {
    for (size_t i = 0; i < r.values.size(); ++i) r.values[i] *= diag.values[i];
  };
}

}  // namespace aphlab

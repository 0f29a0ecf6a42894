#pragma once

#include <cmath>
#include <vector>

#include "aphlab/grid.hpp"
#include "aphlab/multi_index.hpp"

namespace aphlab {

enum class DiffVariant { forward, backward };

namespace detail {

/// One divided difference along `axis`, periodic wrap.
/// forward:  (u(x+h e_a) - u(x)) / h,  backward: (u(x) - u(x-h e_a)) / h.
inline void axis_diff(const GridField& in, int axis, DiffVariant v, GridField& out) {
  const TorusGrid& g = in.grid;
  const int n = g.n_per_dim;
  const long comps = in.components;
  const double inv_h = 1.0 / g.h();
  const long stride = g.stride(axis);          // nodes per step along `axis`
  const long inner = stride * comps;           // doubles per step along `axis`
  const long lines = g.num_nodes() / (static_cast<long>(n) * stride);
  const double* src = in.values.data();
  double* dst = out.values.data();
  for (long line = 0; line < lines; ++line) {
    const long base = line * n * inner;
    for (int j = 0; j < n; ++j) {
      const long p = base + j * inner;
      long q;
      if (v == DiffVariant::forward) {
        q = (j + 1 == n) ? base : p + inner;
        for (long c = 0; c < inner; ++c) dst[p + c] = (src[q + c] - src[p + c]) * inv_h;
      } else {
        q = (j == 0) ? base + static_cast<long>(n - 1) * inner : p - inner;
        for (long c = 0; c < inner; ++c) dst[p + c] = (src[p + c] - src[q + c]) * inv_h;
      }
    }
  }
}

}  // namespace detail

/// D^alpha as a composition of one-dimensional divided differences per axis.
inline GridField apply_Dalpha(const GridField& u, const MultiIndex& alpha, DiffVariant v) {
  if (alpha.dim() != u.grid.d) throw ShapeMismatch("apply_Dalpha multi-index dimension");
  GridField cur = u, tmp(u.grid, u.components);
  for (int axis = 0; axis < u.grid.d; ++axis) {
    for (int rep = 0; rep < alpha.entries[axis]; ++rep) {
      detail::axis_diff(cur, axis, v, tmp);
      std::swap(cur, tmp);
    }
  }
  return cur;
}

/// Adjoint of forward D^alpha under the grid inner product: (-1)^{|alpha|} backward^alpha.
inline GridField apply_Dalpha_adjoint(const GridField& u, const MultiIndex& alpha) {
  GridField out = apply_Dalpha(u, alpha, DiffVariant::backward);
  if (alpha.order() % 2 != 0) out *= -1.0;
  return out;
}

/// Apply sum_{alpha,beta} adj(D^alpha)( A^{alpha beta} F^beta u ) + T^{-2m} u,
/// whose bilinear form is h^d sum_x (F^alpha v) . A . (F^beta u) + T^{-2m} <u,v>_h
/// exactly (discrete summation by parts). `t_pow` is T^{-2m}; pass 0 for T = infinity.
inline GridField apply_operator(const GridField& A_samples, int m, int n, double t_pow,
                                const GridField& u) {
  const TorusGrid& g = u.grid;
  if (!(A_samples.grid == g)) throw ShapeMismatch("coefficient samples grid");
  if (u.components != n) throw ShapeMismatch("operator input components");
  const auto alphas = MultiIndex::all_of_order(g.d, m);
  const int mb = static_cast<int>(alphas.size());
  if (A_samples.components != mb * mb * n * n) throw ShapeMismatch("coefficient tensor entries");
  const long N = g.num_nodes();

  std::vector<GridField> w;
  w.reserve(mb);
  for (int b = 0; b < mb; ++b) w.push_back(apply_Dalpha(u, alphas[b], DiffVariant::forward));

  GridField out(g, n);
  GridField v(g, n);
  for (int a = 0; a < mb; ++a) {
    for (auto& x : v.values) x = 0.0;
    for (int b = 0; b < mb; ++b) {
      const GridField& wb = w[b];
      for (long p = 0; p < N; ++p) {
        const double* Ap = &A_samples.values[p * A_samples.components];
        for (int i = 0; i < n; ++i) {
          double acc = 0;
          for (int j = 0; j < n; ++j) acc += Ap[((a * mb + b) * n + i) * n + j] * wb.at(p, j);
          v.at(p, i) += acc;
        }
      }
    }
    out += apply_Dalpha_adjoint(v, alphas[a]);
  }
  if (t_pow != 0.0) {
    for (long p = 0; p < N; ++p)
      for (int i = 0; i < n; ++i) out.at(p, i) += t_pow * u.at(p, i);
  }
  return out;
}

/// Constant-coefficient power of the mimetic Laplacian:
/// (sum_k adj(F_k) F_k)^m u + t_pow * u. Used for the dual corrector systems.
inline GridField apply_poly_laplacian(const GridField& u, int m, double t_pow) {
  const TorusGrid& g = u.grid;
  GridField cur = u;
  for (int rep = 0; rep < m; ++rep) {
    GridField next(g, u.components);
    for (int axis = 0; axis < g.d; ++axis) {
      MultiIndex e;
      e.entries.assign(g.d, 0);
      e.entries[axis] = 1;
      GridField fu = apply_Dalpha(cur, e, DiffVariant::forward);
      next += apply_Dalpha_adjoint(fu, e);
    }
    cur = next;
  }
  if (t_pow != 0.0) {
    for (size_t i = 0; i < cur.values.size(); ++i) cur.values[i] += t_pow * u.values[i];
  }
  return cur;
}

enum class GridNormKind { L2, SR2, Hk };

/// L2 = (h^d sum |u|^2)^{1/2}; SR2 = sup over node-centered windows of radius R
/// of the windowed RMS (torus metric); Hk = (sum_{l<=k} ||grad^l u||^2)^{1/2}
/// with forward differences and grad^l the plain vector over |alpha| = l.
inline double grid_norm(const GridField& u, GridNormKind kind, double param = 0.0) {
  const TorusGrid& g = u.grid;
  const long N = g.num_nodes();
  if (kind == GridNormKind::L2) {
    double s = 0;
    for (double v : u.values) s += v * v;
    return std::sqrt(s * std::pow(g.h(), g.d));
  }
  if (kind == GridNormKind::Hk) {
    const int k = static_cast<int>(param);
    double s = 0;
    for (int l = 0; l <= k; ++l) {
      for (const auto& alpha : MultiIndex::all_of_order(g.d, l)) {
        GridField du = apply_Dalpha(u, alpha, DiffVariant::forward);
        double t = grid_norm(du, GridNormKind::L2);
        s += t * t;
      }
    }
    return std::sqrt(s);
  }
  // SR2: windowed RMS, exact over all centers in d=1, strided centers in d=2
  const double R = param;
  if (R < g.h()) throw ConfigError("SR2 window radius below grid spacing");
  const int w = std::min(static_cast<int>(std::floor(R / g.h())), g.n_per_dim / 2);
  if (g.d == 1) {
    // squared magnitude per node, prefix sums, sliding window
    std::vector<double> sq(N);
    for (long p = 0; p < N; ++p) {
      double s = 0;
      for (int c = 0; c < u.components; ++c) s += u.at(p, c) * u.at(p, c);
      sq[p] = s;
    }
    std::vector<double> pre(3 * N + 1, 0.0);
    for (long p = 0; p < 3 * N; ++p) pre[p + 1] = pre[p] + sq[p % N];
    double best = 0;
    const long count = 2 * w + 1;
    for (long p = 0; p < N; ++p) {
      long lo = p - w + N;  // window [p-w, p+w] in the tripled array
      double s = pre[lo + count] - pre[lo];
      best = std::max(best, s / count);
    }
    return std::sqrt(best);
  }
  if (g.d == 2) {
    const int n = g.n_per_dim;
    std::vector<double> sq(N);
    for (long p = 0; p < N; ++p) {
      double s = 0;
      for (int c = 0; c < u.components; ++c) s += u.at(p, c) * u.at(p, c);
      sq[p] = s;
    }
    // row prefix sums over tripled rows for wrap-around windows
    std::vector<double> pre(static_cast<size_t>(n) * (3 * n + 1));
    for (int r = 0; r < n; ++r) {
      double* row = &pre[static_cast<size_t>(r) * (3 * n + 1)];
      row[0] = 0;
      for (int c = 0; c < 3 * n; ++c) row[c + 1] = row[c] + sq[static_cast<long>(r) * n + (c % n)];
    }
    // circle offsets: for each |dr| <= w the half-width in columns
    std::vector<int> half(w + 1);
    for (int dr = 0; dr <= w; ++dr)
      half[dr] = static_cast<int>(std::floor(std::sqrt(std::max(0.0, R * R / (g.h() * g.h()) - double(dr) * dr))));
    const int stride_c = std::max(1, w / 8);
    double best = 0;
    for (int r = 0; r < n; r += stride_c) {
      for (int c = 0; c < n; c += stride_c) {
        double s = 0;
        long count = 0;
        for (int dr = -w; dr <= w; ++dr) {
          int hw = half[std::abs(dr)];
          int rr = ((r + dr) % n + n) % n;
          const double* row = &pre[static_cast<size_t>(rr) * (3 * n + 1)];
          long lo = c - hw + n;
          s += row[lo + 2 * hw + 1] - row[lo];
          count += 2 * hw + 1;
        }
        best = std::max(best, s / count);
      }
    }
    return std::sqrt(best);
  }
  throw ConfigError("SR2 supports d in {1,2}");
}

/// Frobenius SR2 over a family of fields treated as one block vector.
inline double sr2_of_family(const std::vector<GridField>& fields, double R) {
  if (fields.empty()) return 0.0;
  const TorusGrid& g = fields.front().grid;
  int total = 0;
  for (const auto& f : fields) total += f.components;
  GridField stacked(g, total);
  const long N = g.num_nodes();
  int off = 0;
  for (const auto& f : fields) {
    for (long p = 0; p < N; ++p)
      for (int c = 0; c < f.components; ++c) stacked.at(p, off + c) = f.at(p, c);
    off += f.components;
  }
  return grid_norm(stacked, GridNormKind::SR2, R);
}

}  // namespace aphlab

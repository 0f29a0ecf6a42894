#pragma once

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <vector>

#include "aphlab/grid.hpp"
#include "aphlab/multi_index.hpp"
#include "aphlab/solver.hpp"

namespace aphlab {

// FFTW plan creation is not thread safe; executing distinct plans is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

namespace detail {

/// Exact inverse of the mean-coefficient mimetic operator on the torus, applied
/// in the discrete Fourier basis of the same forward/backward difference symbols.
/// Scalar symbol sym(xi) = sum_{|alpha|=m} prod_k |s_k|^{2 alpha_k}, s_k the
/// forward-difference symbol; any scalar coefficient scale cancels inside PCG.
class TorusSymbolPrecImpl {
 public:
  TorusSymbolPrecImpl(const TorusGrid& grid, int m, double t_pow, bool deflate)
      : grid_(grid) {
    const long N = grid.num_nodes();
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * N));
    {
      std::lock_guard<std::mutex> lk(fftw_planner_mutex());
      std::vector<int> dims(grid.d, grid.n_per_dim);
      fwd_ = fftw_plan_dft(grid.d, dims.data(), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
      bwd_ = fftw_plan_dft(grid.d, dims.data(), buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    inv_.assign(N, 0.0);
    const double h = grid.h();
    const auto alphas = MultiIndex::all_of_order(grid.d, m);
    int j[4];
    for (long p = 0; p < N; ++p) {
      grid_.coords(p, j);
      double s2[4];
      for (int k = 0; k < grid.d; ++k) {
        const double th = 2.0 * M_PI * j[k] / grid.n_per_dim;
        s2[k] = (2.0 - 2.0 * std::cos(th)) / (h * h);
      }
      double sym = 0.0;
      for (const auto& a : alphas) {
        double prod = 1.0;
        for (int k = 0; k < grid.d; ++k)
          for (int rep = 0; rep < a.entries[k]; ++rep) prod *= s2[k];
        sym += prod;
      }
      const double total = sym + t_pow;
      const bool is_dc = (sym == 0.0);
      if (is_dc && (deflate || t_pow == 0.0))
        inv_[p] = 0.0;
      else
        inv_[p] = 1.0 / (total * N);  // fold in the FFTW normalization
    }
  }

  ~TorusSymbolPrecImpl() {
    std::lock_guard<std::mutex> lk(fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }

  TorusSymbolPrecImpl(const TorusSymbolPrecImpl&) = delete;
  TorusSymbolPrecImpl& operator=(const TorusSymbolPrecImpl&) = delete;

  void apply(GridField& r) const {
    const long N = grid_.num_nodes();
    for (int c = 0; c < r.components; ++c) {
      for (long p = 0; p < N; ++p) {
        buf_[p][0] = r.at(p, c);
        buf_[p][1] = 0.0;
      }
      fftw_execute(fwd_);
      for (long p = 0; p < N; ++p) {
        buf_[p][0] *= inv_[p];
        buf_[p][1] *= inv_[p];
      }
      fftw_execute(bwd_);
      for (long p = 0; p < N; ++p) r.at(p, c) = buf_[p][0];
    }
  }

 private:
  TorusGrid grid_;
  std::vector<double> inv_;
  fftw_complex* buf_;
  fftw_plan fwd_, bwd_;
};

/// Hinged (simply supported) constant-coefficient inverse over the free sub-box
/// of a pinned grid, via DST-I. Spectrally close to the clamped operator; used
/// only as a preconditioner, so the boundary mismatch costs iterations, not accuracy.
class PinnedSymbolPrecImpl {
 public:
  PinnedSymbolPrecImpl(const TorusGrid& grid, int m, int boundary_width, double t_pow)
      : grid_(grid), bw_(boundary_width) {
    len_ = grid.n_per_dim - 2 * bw_;
    if (len_ < 2) throw ConfigError("pinned preconditioner: free region too small");
    long M = 1;
    for (int k = 0; k < grid.d; ++k) M *= len_;
    buf_ = static_cast<double*>(fftw_malloc(sizeof(double) * M));
    {
      std::lock_guard<std::mutex> lk(fftw_planner_mutex());
      std::vector<int> dims(grid.d, len_);
      std::vector<fftw_r2r_kind> kinds(grid.d, FFTW_RODFT00);
      plan_ = fftw_plan_r2r(grid.d, dims.data(), buf_, buf_, kinds.data(), FFTW_ESTIMATE);
    }
    // DST-I eigenvalues of the 1-D Dirichlet second difference
    const double h = grid.h();
    std::vector<double> lam(len_);
    for (int j = 0; j < len_; ++j)
      lam[j] = (2.0 - 2.0 * std::cos(M_PI * (j + 1) / (len_ + 1))) / (h * h);
    inv_.assign(M, 0.0);
    const double norm = std::pow(2.0 * (len_ + 1), grid.d);
    std::vector<int> j(grid.d, 0);
    for (long p = 0; p < M; ++p) {
      long t = p;
      double s = 0;
      for (int k = grid.d - 1; k >= 0; --k) {
        j[k] = static_cast<int>(t % len_);
        t /= len_;
        s += lam[j[k]];
      }
      double sym = 1.0;
      for (int rep = 0; rep < m; ++rep) sym *= s;
      inv_[p] = 1.0 / ((sym + t_pow) * norm);
    }
  }

  ~PinnedSymbolPrecImpl() {
    std::lock_guard<std::mutex> lk(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(buf_);
  }

  PinnedSymbolPrecImpl(const PinnedSymbolPrecImpl&) = delete;
  PinnedSymbolPrecImpl& operator=(const PinnedSymbolPrecImpl&) = delete;

  void apply(GridField& r) const {
    const int n = grid_.n_per_dim;
    long M = 1;
    for (int k = 0; k < grid_.d; ++k) M *= len_;
    for (int c = 0; c < r.components; ++c) {
      // gather free box
      for (long q = 0; q < M; ++q) {
        long t = q, node = 0;
        for (int k = grid_.d - 1; k >= 0; --k) {
          int jk = static_cast<int>(t % len_) + bw_;
          t /= len_;
          node += static_cast<long>(jk) * grid_.stride(k);
        }
        buf_[q] = r.at(node, c);
      }
      fftw_execute(plan_);
      for (long q = 0; q < M; ++q) buf_[q] *= inv_[q];
      fftw_execute(plan_);
      for (long p = 0; p < grid_.num_nodes(); ++p) r.at(p, c) = 0.0;
      for (long q = 0; q < M; ++q) {
        long t = q, node = 0;
        for (int k = grid_.d - 1; k >= 0; --k) {
          int jk = static_cast<int>(t % len_) + bw_;
          t /= len_;
          node += static_cast<long>(jk) * grid_.stride(k);
        }
        r.at(node, c) = buf_[q];
      }
    }
    (void)n;
  }

 private:
  TorusGrid grid_;
  int bw_, len_;
  std::vector<double> inv_;
  double* buf_;
  fftw_plan plan_;
};

}  // namespace detail

inline PrecFn make_torus_symbol_prec(const TorusGrid& grid, int m, double t_pow, bool deflate) {
  auto impl = std::make_shared<detail::TorusSymbolPrecImpl>(grid, m, t_pow, deflate);
  return [impl](GridField& r) { impl->apply(r); };
}

inline PrecFn make_pinned_symbol_prec(const TorusGrid& grid, int m, int boundary_width, double t_pow) {
  auto impl = std::make_shared<detail::PinnedSymbolPrecImpl>(grid, m, boundary_width, t_pow);
  return [impl](GridField& r) { impl->apply(r); };
}

}  // namespace aphlab

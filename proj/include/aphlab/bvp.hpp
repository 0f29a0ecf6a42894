#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "aphlab/coeff_field.hpp"
#include "aphlab/corrector.hpp"
#include "aphlab/fd_ops.hpp"
#include "aphlab/grid.hpp"
#include "aphlab/solver.hpp"
#include "aphlab/spectral_prec.hpp"

namespace aphlab {

/// Cube domain [0, side]^d discretized as a torus with `boundary_width` node
/// layers pinned to zero per side. Pinning m layers imposes the homogeneous
/// Dirichlet traces Tr(D^gamma u)=0, |gamma| <= m-1, to O(h).
struct BoxDomain {
  int d = 1;
  double side = 1.0;
  int n_per_dim = 64;
  int boundary_width = 1;

  TorusGrid grid() const { return TorusGrid{d, side, n_per_dim}; }
  double h() const { return side / n_per_dim; }

  bool pinned_coord(int j) const { return j < boundary_width || j >= n_per_dim - boundary_width; }

  bool pinned(long node) const {
    int j[4];
    grid().coords(node, j);
    for (int k = 0; k < d; ++k)
      if (pinned_coord(j[k])) return true;
    return false;
  }

  std::vector<char> pin_mask() const {
    const TorusGrid g = grid();
    std::vector<char> mask(g.num_nodes(), 0);
    int j[4];
    for (long p = 0; p < g.num_nodes(); ++p) {
      g.coords(p, j);
      for (int k = 0; k < d; ++k)
        if (pinned_coord(j[k])) {
          mask[p] = 1;
          break;
        }
    }
    return mask;
  }

  /// Distance to the box boundary (0 inside the pinned band).
  double dist_to_boundary(const double* x) const {
    double dmin = 1e300;
    for (int k = 0; k < d; ++k) dmin = std::min(dmin, std::min(x[k], side - x[k]));
    return std::max(0.0, dmin);
  }
};

/// Dirichlet data restricted to zero Whitney arrays; f given analytically.
struct DirichletProblem {
  CoeffField field;
  double eps = 0.5;
  TensorFieldFn f;  // n components
};

namespace detail {

inline void apply_mask(GridField& u, const std::vector<char>& mask) {
  const long N = u.grid.num_nodes();
  for (long p = 0; p < N; ++p)
    if (mask[p])
      for (int c = 0; c < u.components; ++c) u.at(p, c) = 0.0;
}

inline GridField solve_pinned(const GridField& A_samples, int m, int n, const GridField& f_samples,
                              const BoxDomain& dom, const SolverConfig& cfg, SolveReport* rep) {
  if (dom.n_per_dim < 4 * m) throw ConfigError("box needs n_per_dim >= 4m");
  const auto mask = dom.pin_mask();
  GridField rhs = f_samples;
  apply_mask(rhs, mask);
  OpFn op = [&](const GridField& u) {
    GridField v = u;
    apply_mask(v, mask);
    GridField out = apply_operator(A_samples, m, n, 0.0, v);
    apply_mask(out, mask);
    return out;
  };
  PrecFn prec = nullptr;
  SolverConfig c = cfg;
  c.deflate_mean = false;
  if (cfg.prec == SolverConfig::Prec::symbol) {
    PrecFn inner = make_pinned_symbol_prec(dom.grid(), m, dom.boundary_width, 0.0);
    prec = [inner, mask](GridField& r) {
      apply_mask(r, mask);
      inner(r);
      apply_mask(r, mask);
    };
  } else if (cfg.prec == SolverConfig::Prec::diagonal) {
    GridField diag = operator_diagonal(A_samples, m, n, 0.0);
    prec = make_diagonal_prec(diag);
  }
  return solve_spd(op, rhs, c, prec, rep);
}

}  // namespace detail

/// Solve the oscillating-coefficient Dirichlet problem on the box via the
/// mimetic weak form with pinned boundary layers. CG to cfg.rel_tol.
inline GridField solve_eps_problem(const DirichletProblem& prob, const BoxDomain& dom,
                                   const SolverConfig& cfg, SolveReport* rep = nullptr,
                                   bool check_field = true) {
  if (dom.h() > prob.eps / 16.0 + 1e-15) throw ResolutionTooCoarse(prob.eps, dom.h());
  if (dom.boundary_width < prob.field.m) throw ConfigError("boundary_width must be >= m");
  if (check_field) {
    auto ar = check_admissible(prob.field, prob.field.d == 1 ? 256 : 24, 4.0);
    if (!ar.bound_ok || !ar.coercive_ok) throw AdmissibilityLost(prob.field.id);
  }
  const TorusGrid g = dom.grid();
  GridField A = sample_on_grid(prob.field, g, prob.eps);
  GridField f = sample_on_grid(prob.f, g);
  return detail::solve_pinned(A, prob.field.m, prob.field.n, f, dom, cfg, rep);
}

/// Same discretization with the constant homogenized tensor.
inline GridField solve_homogenized(const HomogenizedTensor& Ahat, const TensorFieldFn& f,
                                   const BoxDomain& dom, const SolverConfig& cfg,
                                   SolveReport* rep = nullptr) {
  if (dom.boundary_width < Ahat.m) throw ConfigError("boundary_width must be >= m");
  const TorusGrid g = dom.grid();
  GridField A(g, static_cast<int>(Ahat.values.size()));
  const long N = g.num_nodes();
  for (long p = 0; p < N; ++p)
    for (size_t e = 0; e < Ahat.values.size(); ++e) A.values[p * A.components + e] = Ahat.values[e];
  GridField fs = sample_on_grid(f, g);
  return detail::solve_pinned(A, Ahat.m, Ahat.n, fs, dom, cfg, rep);
}

struct SmoothingConfig {
  double eps = 0.0;
  double delta = 0.0;  // must satisfy 2 eps <= delta <= 2

  void validate() const {
    if (!(delta >= 2.0 * eps - 1e-12)) throw ConfigError("smoothing needs delta >= 2 eps");
  }
};

/// Discrete convolution with the sampled standard bump zeta_eps, kernel mass
/// renormalized to 1 exactly. Torus wrap; intended for interior-supported fields.
inline GridField mollify_S(const GridField& f, double eps) {
  const TorusGrid& g = f.grid;
  const double h = g.h();
  if (eps < 2.0 * h) throw KernelUnderresolved(eps, h);
  const int w = static_cast<int>(std::ceil(eps / h)) - 1;
  // sample zeta(x) = exp(-1/(1-|x|^2)) on the offset lattice, then normalize
  std::vector<double> ker;
  std::vector<std::vector<int>> offs;
  double mass = 0.0;
  if (g.d == 1) {
    for (int o = -w; o <= w; ++o) {
      const double t = o * h / eps;
      if (t * t >= 1.0) continue;
      const double v = std::exp(-1.0 / (1.0 - t * t));
      ker.push_back(v);
      offs.push_back({o});
      mass += v;
    }
  } else if (g.d == 2) {
    for (int o1 = -w; o1 <= w; ++o1)
      for (int o2 = -w; o2 <= w; ++o2) {
        const double t2 = (o1 * o1 + o2 * o2) * h * h / (eps * eps);
        if (t2 >= 1.0) continue;
        const double v = std::exp(-1.0 / (1.0 - t2));
        ker.push_back(v);
        offs.push_back({o1, o2});
        mass += v;
      }
  } else {
    throw ConfigError("mollify_S supports d in {1,2}");
  }
  for (auto& v : ker) v /= mass;

  GridField out(g, f.components);
  const long N = g.num_nodes();
  const int n = g.n_per_dim;
  int j[4];
  for (long p = 0; p < N; ++p) {
    g.coords(p, j);
    for (size_t q = 0; q < ker.size(); ++q) {
      long node = 0;
      for (int k = 0; k < g.d; ++k) {
        int jj = j[k] - offs[q][k];
        jj = ((jj % n) + n) % n;
        node += static_cast<long>(jj) * g.stride(k);
      }
      for (int c = 0; c < f.components; ++c) out.at(p, c) += ker[q] * f.at(node, c);
    }
  }
  return out;
}

/// C^m smoothstep of degree 2m+1 on [0,1].
inline double smoothstep(int m, double t) {
  if (t <= 0) return 0.0;
  if (t >= 1) return 1.0;
  // S_m(t) = t^{m+1} sum_{k=0}^{m} C(m+k,k) C(2m+1, m-k) (-t)^k
  auto binom = [](int a, int b) {
    double c = 1;
    for (int i = 0; i < b; ++i) c = c * (a - i) / (i + 1);
    return c;
  };
  double s = 0, tk = 1;
  for (int k = 0; k <= m; ++k) {
    s += binom(m + k, k) * binom(2 * m + 1, m - k) * tk * ((k % 2) ? -1.0 : 1.0);
    tk *= t;
  }
  return std::pow(t, m + 1) * s;
}

/// Boundary cutoff: 0 on the delta-collar, 1 beyond the 2 delta collar,
/// C^m smoothstep of the distance in between; |grad^l eta| <= C delta^{-l}.
inline GridField cutoff_eta(const BoxDomain& dom, double delta, int m) {
  if (delta < 4.0 * dom.h()) throw ConfigError("cutoff needs delta >= 4h");
  const TorusGrid g = dom.grid();
  GridField eta(g, 1);
  const long N = g.num_nodes();
  std::vector<double> x(g.d);
  for (long p = 0; p < N; ++p) {
    g.point(p, x.data());
    const double dist = dom.dist_to_boundary(x.data());
    eta.at(p, 0) = smoothstep(m, (dist - delta) / delta);
  }
  return eta;
}

/// K_{eps,delta} f = S_eps(eta_delta f); support guaranteed inside the eps-collar.
inline GridField K_eps_delta(const GridField& f, const SmoothingConfig& scfg, const BoxDomain& dom,
                             int m) {
  scfg.validate();
  GridField etaf = f;
  GridField eta = cutoff_eta(dom, scfg.delta, m);
  const long N = f.grid.num_nodes();
  for (long p = 0; p < N; ++p)
    for (int c = 0; c < f.components; ++c) etaf.at(p, c) *= eta.at(p, 0);
  GridField out = mollify_S(etaf, scfg.eps);
  // node-wise support check
  double mx = 0;
  for (double v : out.values) mx = std::max(mx, std::fabs(v));
  std::vector<double> x(f.grid.d);
  for (long p = 0; p < N; ++p) {
    f.grid.point(p, x.data());
    if (dom.dist_to_boundary(x.data()) < scfg.eps - 1e-12) {
      for (int c = 0; c < f.components; ++c)
        if (std::fabs(out.at(p, c)) > 1e-12 * std::max(mx, 1.0))
          throw SupportViolation("K_{eps,delta} leaked mass within eps of the boundary");
    }
  }
  return out;
}

struct TwoScaleResult {
  GridField omega;
  double omega_L2 = 0, omega_Hm1 = 0, omega_Hm = 0;
  double diff_L2 = 0, diff_Hm1 = 0, diff_Hm = 0;  // u_eps - u_0
};

/// omega_eps = u_eps - u_0 - eps^m sum_gamma chi_T^gamma(x/eps) K_{eps,delta}(D^gamma u_0).
/// chi is sampled at x/eps by exact node alignment: the corrector grid spacing
/// must divide h_bvp/eps.
inline TwoScaleResult two_scale_error(const GridField& u_eps, const GridField& u0,
                                      const CorrectorSet& set, const SmoothingConfig& scfg,
                                      const BoxDomain& dom) {
  scfg.validate();
  const TorusGrid g = dom.grid();
  if (!(u_eps.grid == g) || !(u0.grid == g)) throw ShapeMismatch("two_scale_error grids");
  const int m = set.m, n = set.n;
  const double eps = scfg.eps;
  const double ratio = dom.h() / (eps * set.grid.h());
  const long q = static_cast<long>(std::llround(ratio));
  if (std::fabs(ratio - q) > 1e-9 || q < 1)
    throw ShapeMismatch("corrector grid does not align with x/eps sampling");

  TwoScaleResult res;
  res.omega = u_eps;
  res.omega -= u0;
  GridField diff = res.omega;

  const auto gammas = MultiIndex::all_of_order(set.d, m);
  const double epsm = std::pow(eps, m);
  const long N = g.num_nodes();
  const long Nc = set.grid.num_nodes();
  for (int gi = 0; gi < static_cast<int>(gammas.size()); ++gi) {
    GridField dg = apply_Dalpha(u0, gammas[gi], DiffVariant::forward);
    GridField kdg = K_eps_delta(dg, scfg, dom, m);
    // node p of the box maps to corrector node (p*q mod Nc) in 1-D; per-axis in general
    int j[4];
    for (long p = 0; p < N; ++p) {
      g.coords(p, j);
      long cnode = 0;
      for (int k = 0; k < g.d; ++k) {
        long cj = (static_cast<long>(j[k]) * q) % set.grid.n_per_dim;
        cnode += cj * set.grid.stride(k);
      }
      (void)Nc;
      for (int i = 0; i < n; ++i) {
        double term = 0;
        for (int l = 0; l < n; ++l) term += set.chi_of(gi, l).at(cnode, i) * kdg.at(p, l);
        res.omega.at(p, i) -= epsm * term;
      }
    }
  }
  res.omega_L2 = grid_norm(res.omega, GridNormKind::L2);
  res.omega_Hm1 = grid_norm(res.omega, GridNormKind::Hk, m - 1);
  res.omega_Hm = grid_norm(res.omega, GridNormKind::Hk, m);
  res.diff_L2 = grid_norm(diff, GridNormKind::L2);
  res.diff_Hm1 = grid_norm(diff, GridNormKind::Hk, m - 1);
  res.diff_Hm = grid_norm(diff, GridNormKind::Hk, m);
  return res;
}

}  // namespace aphlab

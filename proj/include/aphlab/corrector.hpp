#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "aphlab/coeff_field.hpp"
#include "aphlab/fd_ops.hpp"
#include "aphlab/grid.hpp"
#include "aphlab/sampling.hpp"
#include "aphlab/solver.hpp"
#include "aphlab/spectral_prec.hpp"

namespace aphlab {

struct EntryReport {
  int iterations = 0;
  double rel_residual = 0.0;
  double rhs_norm = 0.0;
};

/// The family chi_T^gamma_l on a grid for one T. chi[g*n + l] holds the n
/// components (j) of chi_{T,j l}^gamma. A_samples keeps the coefficient tensor
/// sampled on the same nodes (with the solve's offset folded in).
struct CorrectorSet {
  std::string field_id;
  int d = 1, m = 1, n = 1;
  double T = 1.0;
  double t_pow = 0.0;  // T^{-2m}
  TorusGrid grid;
  GridField A_samples;
  std::vector<GridField> chi;
  std::vector<EntryReport> reports;
  double rel_tol = 0.0;
  double mean_tol_factor = 1e-7;

  int mbar() const { return count_of_order(d, m); }
  const GridField& chi_of(int gamma, int l) const { return chi[gamma * n + l]; }
  double max_rhs_norm() const {
    double s = 0;
    for (const auto& r : reports) s = std::max(s, r.rhs_norm);
    return s;
  }
};

namespace detail {

/// Weak-form right-hand side for chi^gamma_l: since D^beta P^gamma_l = delta^{beta gamma} e_l
/// exactly on the grid, the functional is v -> -h^d sum_x sum_alpha (F^alpha v) . A^{alpha gamma} e_l,
/// i.e. the field -sum_alpha adj(D^alpha)(A^{. gamma} e_l). No polynomial ever lives on the grid.
inline GridField corrector_rhs_entry(const GridField& A_samples, int m, int n, int gamma, int l) {
  const TorusGrid& g = A_samples.grid;
  const auto alphas = MultiIndex::all_of_order(g.d, m);
  const int mb = static_cast<int>(alphas.size());
  const long N = g.num_nodes();
  GridField rhs(g, n);
  GridField col(g, n);
  for (int a = 0; a < mb; ++a) {
    for (long p = 0; p < N; ++p) {
      const double* Ap = &A_samples.values[p * A_samples.components];
      for (int i = 0; i < n; ++i) col.at(p, i) = Ap[((a * mb + gamma) * n + i) * n + l];
    }
    rhs -= apply_Dalpha_adjoint(col, alphas[a]);
  }
  return rhs;
}

inline PrecFn build_prec(const SolverConfig& cfg, const GridField& A_samples, const TorusGrid& grid,
                         int m, int n, double t_pow) {
  switch (cfg.prec) {
    case SolverConfig::Prec::none:
      return nullptr;
    case SolverConfig::Prec::diagonal:
      return make_diagonal_prec(operator_diagonal(A_samples, m, n, t_pow));
    case SolverConfig::Prec::symbol:
      return make_torus_symbol_prec(grid, m, t_pow, cfg.deflate_mean);
  }
  return nullptr;
}

}  // namespace detail

/// Solve the approximate corrector systems for every (gamma, l) on the torus.
/// Admissibility is the caller's responsibility for perturbed fields at large
/// offsets; a pointwise sample check guards the common case.
inline CorrectorSet solve_approx_corrector(const CoeffField& field, double T, const TorusGrid& grid,
                                           SolverConfig cfg, const std::vector<double>& offset = {},
                                           bool check_field = true) {
  field.validate();
  if (T <= 0) throw ConfigError("corrector solve needs T > 0");
  if (grid.n_per_dim < 4 * field.m) throw ConfigError("grid needs n_per_dim >= 4m");
  if (check_field) {
    auto rep = check_admissible(field, field.d == 1 ? 256 : 24, 4.0);
    if (!rep.bound_ok || !rep.coercive_ok)
      throw AdmissibilityLost(field.id + ": bound_ok=" + std::to_string(rep.bound_ok) +
                              " min_eigen=" + std::to_string(rep.min_eigen));
  }
  CorrectorSet set;
  set.field_id = field.id;
  set.d = field.d;
  set.m = field.m;
  set.n = field.n;
  set.T = T;
  set.t_pow = std::pow(T, -2.0 * field.m);
  set.grid = grid;
  set.rel_tol = cfg.rel_tol;
  set.A_samples = sample_on_grid(field, grid, 1.0, offset);

  cfg.deflate_mean = true;  // <chi_T> = 0 holds exactly in the discrete weak form
  PrecFn prec = detail::build_prec(cfg, set.A_samples, grid, field.m, field.n, set.t_pow);
  const GridField& A = set.A_samples;
  const int m = field.m, n = field.n;
  const double t_pow = set.t_pow;
  OpFn op = [&A, m, n, t_pow](const GridField& u) { return apply_operator(A, m, n, t_pow, u); };

  const int mb = set.mbar();
  for (int gmm = 0; gmm < mb; ++gmm) {
    for (int l = 0; l < n; ++l) {
      GridField rhs = detail::corrector_rhs_entry(set.A_samples, m, n, gmm, l);
      SolveReport rep;
      GridField sol = solve_spd(op, rhs, cfg, prec, &rep);
      set.chi.push_back(std::move(sol));
      set.reports.push_back({rep.iterations, rep.rel_residual, rep.rhs_norm});
    }
  }
  return set;
}

/// Grid average of every chi entry; all must sit below mean_tol_factor * ||chi||_L2.
inline std::vector<double> corrector_mean(const CorrectorSet& set) {
  std::vector<double> out;
  for (const auto& c : set.chi) {
    auto m = grid_mean(c);
    out.insert(out.end(), m.begin(), m.end());
  }
  return out;
}

inline double corrector_mean_worst_ratio(const CorrectorSet& set) {
  double worst = 0.0;
  for (const auto& c : set.chi) {
    double l2 = grid_norm(c, GridNormKind::L2) / std::pow(set.grid.extent, set.grid.d / 2.0);
    auto mn = grid_mean(c);
    double ma = 0;
    for (double v : mn) ma = std::max(ma, std::fabs(v));
    if (l2 > 0) worst = std::max(worst, ma / l2);
  }
  return worst;
}

/// ||grad^l chi_T||_{S^2_R} for each R in R_list (Frobenius over all indices).
inline std::vector<double> corrector_norm_profile(const CorrectorSet& set, int l,
                                                  const std::vector<double>& R_list) {
  std::vector<GridField> grads;
  for (const auto& c : set.chi)
    for (const auto& alpha : MultiIndex::all_of_order(set.d, l))
      grads.push_back(apply_Dalpha(c, alpha, DiffVariant::forward));
  std::vector<double> out;
  for (double R : R_list) out.push_back(sr2_of_family(grads, R));
  return out;
}

struct HomogenizedTensor {
  int d = 1, m = 1, n = 1;
  double mu = 0.0;
  std::vector<double> values;  // flat (alpha, beta, i, j)
  std::string field_id;
  double T = 0.0;
  double grid_h = 0.0;
  double grid_extent = 0.0;
  bool bound_ok = true;
  bool coercive_ok = true;
  double min_eigen = 0.0;

  int mbar() const { return count_of_order(d, m); }
  int idx(int a, int b, int i, int j) const {
    int mb = mbar();
    return ((a * mb + b) * n + i) * n + j;
  }
};

/// Ahat = <A> + <A grad^m chi_T> (grid averages, forward differences).
inline HomogenizedTensor compute_Ahat(const CoeffField& field, const CorrectorSet& set) {
  const int mb = set.mbar(), n = set.n;
  const long N = set.grid.num_nodes();
  const auto alphas = MultiIndex::all_of_order(set.d, set.m);
  HomogenizedTensor H;
  H.d = set.d;
  H.m = set.m;
  H.n = set.n;
  H.mu = field.mu;
  H.field_id = set.field_id;
  H.T = set.T;
  H.grid_h = set.grid.h();
  H.grid_extent = set.grid.extent;
  H.values = grid_mean(set.A_samples);

  // correction <A^{a g}_{ik} (F^g chi^b_{.j})_k>
  for (int b = 0; b < mb; ++b) {
    for (int j = 0; j < n; ++j) {
      const GridField& chi = set.chi_of(b, j);
      for (int gmm = 0; gmm < mb; ++gmm) {
        GridField dchi = apply_Dalpha(chi, alphas[gmm], DiffVariant::forward);
        for (int a = 0; a < mb; ++a) {
          for (int i = 0; i < n; ++i) {
            double sum = 0.0, comp = 0.0;
            for (long p = 0; p < N; ++p) {
              const double* Ap = &set.A_samples.values[p * set.A_samples.components];
              double term = 0;
              for (int k = 0; k < n; ++k) term += Ap[((a * mb + gmm) * n + i) * n + k] * dchi.at(p, k);
              double y = term - comp;
              double t = sum + y;
              comp = (t - sum) - y;
              sum = t;
            }
            H.values[H.idx(a, b, i, j)] += sum / N;
          }
        }
      }
    }
  }
  // constant-form sanity checks
  double ma = 0;
  for (double v : H.values) ma = std::max(ma, std::fabs(v));
  H.bound_ok = field.mu > 0 && ma <= 1.0 / field.mu + 1e-9;
  const int dim = mb * n;
  std::vector<double> Q(dim * dim);
  for (int a = 0; a < mb; ++a)
    for (int i = 0; i < n; ++i)
      for (int b = 0; b < mb; ++b)
        for (int j = 0; j < n; ++j)
          Q[(a * n + i) * dim + (b * n + j)] =
              0.5 * (H.values[H.idx(a, b, i, j)] + H.values[H.idx(b, a, j, i)]);
  H.min_eigen = smallest_eigenvalue_sym(Q, dim);
  H.coercive_ok = H.min_eigen > 0;
  return H;
}

/// B_T = A + A grad^m chi_T - Ahat, sampled on the grid, with its mean recorded.
struct FluxTensor {
  GridField B;                 // entries as the coefficient tensor
  std::vector<double> mean_B;  // per entry
  double max_abs_mean() const {
    double s = 0;
    for (double v : mean_B) s = std::max(s, std::fabs(v));
    return s;
  }
};

inline FluxTensor compute_flux(const CorrectorSet& set, const HomogenizedTensor& Ahat) {
  const int mb = set.mbar(), n = set.n;
  const long N = set.grid.num_nodes();
  const auto alphas = MultiIndex::all_of_order(set.d, set.m);
  FluxTensor F;
  F.B = set.A_samples;  // start from A
  for (int b = 0; b < mb; ++b) {
    for (int j = 0; j < n; ++j) {
      const GridField& chi = set.chi_of(b, j);
      for (int gmm = 0; gmm < mb; ++gmm) {
        GridField dchi = apply_Dalpha(chi, alphas[gmm], DiffVariant::forward);
        for (long p = 0; p < N; ++p) {
          const double* Ap = &set.A_samples.values[p * set.A_samples.components];
          for (int a = 0; a < mb; ++a)
            for (int i = 0; i < n; ++i) {
              double term = 0;
              for (int k = 0; k < n; ++k) term += Ap[((a * mb + gmm) * n + i) * n + k] * dchi.at(p, k);
              F.B.values[p * F.B.components + ((a * mb + b) * n + i) * n + j] += term;
            }
        }
      }
    }
  }
  for (long p = 0; p < N; ++p)
    for (int e = 0; e < F.B.components; ++e) F.B.values[p * F.B.components + e] -= Ahat.values[e];
  F.mean_B = grid_mean(F.B);
  return F;
}

/// Relative residual of sum_alpha D^alpha_h B^{alpha gamma} = (-1)^{m+1} T^{-2m} chi^gamma,
/// with D^alpha_h the same backward-adjoint composition the assembly uses.
/// The scale is the largest corrector rhs norm, so a clean solve yields a value
/// at the level of the solver's rel_tol. `mismatch_variant` forces the forward
/// composition instead (negative control: the identity then fails by O(1)).
inline double flux_divergence_check(const FluxTensor& flux, const CorrectorSet& set,
                                    bool mismatch_variant = false) {
  const int mb = set.mbar(), n = set.n;
  const long N = set.grid.num_nodes();
  const auto alphas = MultiIndex::all_of_order(set.d, set.m);
  const double sign = (set.m % 2 == 0) ? -1.0 : 1.0;  // (-1)^{m+1}
  double worst = 0.0;
  const double scale = std::max(set.max_rhs_norm(), 1e-300);
  for (int gmm = 0; gmm < mb; ++gmm) {
    for (int l = 0; l < n; ++l) {
      GridField div(set.grid, n);
      GridField col(set.grid, n);
      for (int a = 0; a < mb; ++a) {
        for (long p = 0; p < N; ++p) {
          const double* Bp = &flux.B.values[p * flux.B.components];
          for (int i = 0; i < n; ++i) col.at(p, i) = Bp[((a * mb + gmm) * n + i) * n + l];
        }
        if (mismatch_variant)
          div += apply_Dalpha(col, alphas[a], DiffVariant::forward);
        else
          div += apply_Dalpha(col, alphas[a], DiffVariant::backward);
      }
      // backward composition B^alpha equals (-1)^m adj(D^alpha); identity reads
      // sum_alpha B^alpha(B_flux) = (-1)^{m+1} T^{-2m} chi
      const GridField& chi = set.chi_of(gmm, l);
      double s = 0;
      for (long p = 0; p < N; ++p)
        for (int i = 0; i < n; ++i) {
          const double r = div.at(p, i) - sign * set.t_pow * chi.at(p, i);
          s += r * r;
        }
      worst = std::max(worst, std::sqrt(s));
    }
  }
  return worst / scale;
}

/// Dual correctors phi_T per tensor entry and their contractions h_T.
struct DualCorrectorSet {
  int d = 1, m = 1, n = 1;
  double T = 1.0;
  TorusGrid grid;
  std::vector<GridField> phi;  // scalar field per (a,b,i,j), flat index as the tensor
  std::vector<GridField> h;    // scalar field per (b,i,j): h^b_ij = sum_a F^a phi^{ab}_ij
  std::vector<EntryReport> reports;
  int mbar() const { return count_of_order(d, m); }
  int phi_idx(int a, int b, int i, int j) const {
    int mb = mbar();
    return ((a * mb + b) * n + i) * n + j;
  }
  int h_idx(int b, int i, int j) const { return (b * n + i) * n + j; }
};

/// Solve ((-Delta_h)^m + T^{-2m}) phi = B - <B> entrywise, then h = sum_a F^a phi.
inline DualCorrectorSet solve_dual_corrector(const FluxTensor& flux, int d, int m, int n, double T,
                                             SolverConfig cfg) {
  DualCorrectorSet ds;
  ds.d = d;
  ds.m = m;
  ds.n = n;
  ds.T = T;
  ds.grid = flux.B.grid;
  const double t_pow = std::pow(T, -2.0 * m);
  const auto alphas = MultiIndex::all_of_order(d, m);
  const int mb = static_cast<int>(alphas.size());
  const long N = ds.grid.num_nodes();
  cfg.deflate_mean = true;
  PrecFn prec = nullptr;
  if (cfg.prec == SolverConfig::Prec::symbol)
    prec = make_torus_symbol_prec(ds.grid, m, t_pow, true);
  OpFn op = [m, t_pow](const GridField& u) { return apply_poly_laplacian(u, m, t_pow); };

  for (int a = 0; a < mb; ++a)
    for (int b = 0; b < mb; ++b)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          GridField rhs(ds.grid, 1);
          const int e = ((a * mb + b) * n + i) * n + j;
          for (long p = 0; p < N; ++p) rhs.at(p, 0) = flux.B.values[p * flux.B.components + e];
          const double mean = flux.mean_B[e];
          for (long p = 0; p < N; ++p) rhs.at(p, 0) -= mean;
          SolveReport rep;
          GridField sol = solve_spd(op, rhs, cfg, prec, &rep);
          ds.phi.push_back(std::move(sol));
          ds.reports.push_back({rep.iterations, rep.rel_residual, rep.rhs_norm});
        }

  for (int b = 0; b < mb; ++b)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        GridField hf(ds.grid, 1);
        for (int a = 0; a < mb; ++a)
          hf += apply_Dalpha(ds.phi[ds.phi_idx(a, b, i, j)], alphas[a], DiffVariant::forward);
        ds.h.push_back(std::move(hf));
      }
  return ds;
}

/// Max over (a,g,b,i,j) of || (F^g phi^{ab} - F^a phi^{gb}) + (swap a<->g) ||_inf.
/// Pure algebra; should vanish to rounding.
inline double dual_skew_defect(const DualCorrectorSet& ds) {
  const auto alphas = MultiIndex::all_of_order(ds.d, ds.m);
  const int mb = ds.mbar();
  double worst = 0;
  for (int a = 0; a < mb; ++a)
    for (int g = 0; g < mb; ++g)
      for (int i = 0; i < ds.n; ++i)
        for (int j = 0; j < ds.n; ++j)
          for (int b = 0; b < mb; ++b) {
            GridField s1 = apply_Dalpha(ds.phi[ds.phi_idx(a, b, i, j)], alphas[g], DiffVariant::forward);
            s1 -= apply_Dalpha(ds.phi[ds.phi_idx(g, b, i, j)], alphas[a], DiffVariant::forward);
            GridField s2 = apply_Dalpha(ds.phi[ds.phi_idx(g, b, i, j)], alphas[a], DiffVariant::forward);
            s2 -= apply_Dalpha(ds.phi[ds.phi_idx(a, b, i, j)], alphas[g], DiffVariant::forward);
            s1 += s2;
            for (double v : s1.values) worst = std::max(worst, std::fabs(v));
          }
  return worst;
}

struct SensitivityResult {
  std::vector<double> ratios;          // lhs/rhs per retained pair
  std::vector<int> skipped;            // indices of exact-translation pairs
  std::vector<double> lhs, rhs;
};

/// Thm-style translation sensitivity: solves correctors for A(.+y), A(.+z) and
/// returns Sum_k T^{k-m} ||Delta_yz grad^k chi_T||_{S^2_T} / ||Delta_yz A||_{S^p_T}.
inline SensitivityResult translation_sensitivity(
    const CoeffField& field, double T, const TorusGrid& grid, SolverConfig cfg,
    const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs, double p,
    const SamplerConfig& scfg) {
  SensitivityResult res;
  for (size_t pi = 0; pi < pairs.size(); ++pi) {
    const auto& [y, z] = pairs[pi];
    const double rhs = norm_SpR(delta_yz(field, y, z), p, T, scfg);
    if (rhs < 1e-12) {
      res.skipped.push_back(static_cast<int>(pi));
      continue;
    }
    CorrectorSet sy = solve_approx_corrector(field, T, grid, cfg, y, false);
    CorrectorSet sz = solve_approx_corrector(field, T, grid, cfg, z, false);
    double lhs = 0.0;
    for (int k = 0; k <= field.m; ++k) {
      std::vector<GridField> diffs;
      for (size_t e = 0; e < sy.chi.size(); ++e) {
        for (const auto& alpha : MultiIndex::all_of_order(field.d, k)) {
          GridField dk = apply_Dalpha(sy.chi[e], alpha, DiffVariant::forward);
          dk -= apply_Dalpha(sz.chi[e], alpha, DiffVariant::forward);
          diffs.push_back(std::move(dk));
        }
      }
      lhs += std::pow(T, k - field.m) * sr2_of_family(diffs, T);
    }
    res.lhs.push_back(lhs);
    res.rhs.push_back(rhs);
    res.ratios.push_back(lhs / rhs);
  }
  return res;
}

struct CauchyDistance {
  double grad_m = 0.0;  // ||grad^m (chi_T1 - chi_T2)||_{S^2_1}
  double value = 0.0;   // ||chi_T1 - chi_T2||_{S^2_1}
};

inline CauchyDistance cauchy_distance(const CorrectorSet& s1, const CorrectorSet& s2) {
  CauchyDistance cd;
  std::vector<GridField> diffs, grads;
  for (size_t e = 0; e < s1.chi.size(); ++e) {
    GridField d0 = s1.chi[e];
    d0 -= s2.chi[e];
    for (const auto& alpha : MultiIndex::all_of_order(s1.d, s1.m)) {
      grads.push_back(apply_Dalpha(d0, alpha, DiffVariant::forward));
    }
    diffs.push_back(std::move(d0));
  }
  cd.value = sr2_of_family(diffs, 1.0);
  cd.grad_m = sr2_of_family(grads, 1.0);
  return cd;
}

inline CauchyDistance cauchy_distance(const CoeffField& field, double T1, double T2,
                                      const TorusGrid& grid, const SolverConfig& cfg) {
  if (!(T2 >= T1 && T2 <= 2.0 * T1 + 1e-12)) throw ConfigError("cauchy_distance needs T2 in [T1, 2T1]");
  CorrectorSet s1 = solve_approx_corrector(field, T1, grid, cfg, {}, false);
  CorrectorSet s2 = solve_approx_corrector(field, T2, grid, cfg, {}, false);
  return cauchy_distance(s1, s2);
}

}  // namespace aphlab

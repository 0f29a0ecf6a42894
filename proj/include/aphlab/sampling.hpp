#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "aphlab/coeff_field.hpp"
#include "aphlab/errors.hpp"
#include "aphlab/fitting.hpp"

namespace aphlab {

/// Deterministic sampling knobs for the sup/inf functionals. Everything is a
/// function of (cfg, seed); no hidden state.
struct SamplerConfig {
  int center_samples = 24;    // base points x for the sup_x in S^p_R
  int shift_candidates = 48;  // lattice candidates for the inf over |z| <= L
  int ball_quadrature = 32;   // quadrature points per dimension in ball averages
  unsigned seed = 1;
  double sup_radius = 8.0;    // half-width of the box the sup stages sample from
  int refine_rounds = 42;     // step-halving rounds in the inf local refinement

  void validate() const {
    if (center_samples < 1 || shift_candidates < 1 || ball_quadrature < 1)
      throw ConfigError("sampler counts must be >= 1");
  }
};

namespace detail {

inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::fabs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

inline const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre_cached(int n) {
  thread_local std::vector<std::pair<int, std::pair<std::vector<double>, std::vector<double>>>> cache;
  for (auto& e : cache)
    if (e.first == n) return e.second;
  std::pair<std::vector<double>, std::vector<double>> rule;
  gauss_legendre(n, rule.first, rule.second);
  cache.push_back({n, std::move(rule)});
  return cache.back().second;
}

inline double halton(unsigned long i, unsigned base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

/// Low-discrepancy points in [-radius, radius]^d, offset by seed.
inline std::vector<std::vector<double>> halton_box(int d, int count, double radius, unsigned seed) {
  static const unsigned bases[3] = {2, 3, 5};
  std::vector<std::vector<double>> pts(count, std::vector<double>(d));
  for (int i = 0; i < count; ++i)
    for (int k = 0; k < d; ++k)
      pts[i][k] = radius * (2.0 * halton(static_cast<unsigned long>(seed) + 17 + i, bases[k]) - 1.0);
  return pts;
}

}  // namespace detail

/// Frobenius magnitude of a tensor field at y.
inline double field_abs(const TensorFieldFn& f, const double* y, std::vector<double>& scratch) {
  scratch.resize(f.entries);
  f.eval(y, scratch.data());
  double s = 0;
  for (double v : scratch) s += v * v;
  return std::sqrt(s);
}

/// (avg_{B(x,R)} |f|^p)^{1/p} by tensor Gauss quadrature (polar in d=2).
inline double ball_average_p(const TensorFieldFn& f, const std::vector<double>& center, double R,
                             double p, int quad_pts) {
  const auto& [gx, gw] = detail::gauss_legendre_cached(quad_pts);
  std::vector<double> scratch;
  double acc = 0.0;
  if (f.d == 1) {
    double y;
    for (int i = 0; i < quad_pts; ++i) {
      y = center[0] + R * gx[i];
      acc += gw[i] * std::pow(field_abs(f, &y, scratch), p);
    }
    acc /= 2.0;  // weights sum to 2
  } else if (f.d == 2) {
    // integral over the disk in polar coordinates, trapezoid in the angle
    const int na = quad_pts;
    double y[2];
    for (int i = 0; i < quad_pts; ++i) {
      const double r = 0.5 * (gx[i] + 1.0) * R;
      double ring = 0.0;
      for (int j = 0; j < na; ++j) {
        const double th = 2.0 * M_PI * j / na;
        y[0] = center[0] + r * std::cos(th);
        y[1] = center[1] + r * std::sin(th);
        ring += std::pow(field_abs(f, y, scratch), p);
      }
      acc += gw[i] * (R / 2.0) * r * (ring * 2.0 * M_PI / na);
    }
    acc /= M_PI * R * R;
  } else {
    throw ConfigError("ball averages support d in {1,2}");
  }
  return std::pow(acc, 1.0 / p);
}

/// ||f||_{S^p_R}: sup over sampled centers of the ball average. Monotone in the
/// candidate set; reported value is a lower bound of the true sup.
inline double norm_SpR(const TensorFieldFn& f, double p, double R, const SamplerConfig& cfg) {
  cfg.validate();
  if (R <= 0) throw ConfigError("norm_SpR needs R > 0");
  auto centers = detail::halton_box(f.d, cfg.center_samples, cfg.sup_radius, cfg.seed);
  centers.push_back(std::vector<double>(f.d, 0.0));
  double best = 0.0;
  for (const auto& c : centers) best = std::max(best, ball_average_p(f, c, R, p, cfg.ball_quadrature));
  return best;
}

struct MeanValue {
  std::vector<double> value;
  double error_estimate = 0.0;
};

/// Ball average at R_max with a Richardson-style error estimate from R_max/2.
/// For pure trig fields prefer CoeffField::exact_mean().
inline MeanValue mean_value(const TensorFieldFn& f, double R_max, int quad_pts = 64) {
  if (R_max <= 0) throw ConfigError("mean_value needs R_max > 0");
  auto avg_at = [&](double R) {
    const auto& [gx, gw] = detail::gauss_legendre_cached(quad_pts);
    std::vector<double> acc(f.entries, 0.0), tmp(f.entries);
    if (f.d == 1) {
      double y;
      for (int i = 0; i < quad_pts; ++i) {
        y = R * gx[i];
        f.eval(&y, tmp.data());
        for (int e = 0; e < f.entries; ++e) acc[e] += gw[i] * tmp[e] / 2.0;
      }
    } else if (f.d == 2) {
      double y[2];
      for (int i = 0; i < quad_pts; ++i) {
        const double r = 0.5 * (gx[i] + 1.0) * R;
        std::vector<double> ring(f.entries, 0.0);
        for (int j = 0; j < quad_pts; ++j) {
          const double th = 2.0 * M_PI * j / quad_pts;
          y[0] = r * std::cos(th);
          y[1] = r * std::sin(th);
          f.eval(y, tmp.data());
          for (int e = 0; e < f.entries; ++e) ring[e] += tmp[e];
        }
        for (int e = 0; e < f.entries; ++e)
          acc[e] += gw[i] * (R / 2.0) * r * ring[e] * (2.0 * M_PI / quad_pts) / (M_PI * R * R);
      }
    } else {
      throw ConfigError("mean_value supports d in {1,2}");
    }
    return acc;
  };
  MeanValue mv;
  mv.value = avg_at(R_max);
  auto half = avg_at(R_max / 2.0);
  for (int e = 0; e < f.entries; ++e)
    mv.error_estimate = std::max(mv.error_estimate, std::fabs(mv.value[e] - half[e]));
  return mv;
}

namespace detail {

/// A k-fold difference composition applied to f, kept as a list of (shift, sign).
struct ShiftSum {
  std::vector<std::pair<std::vector<double>, double>> terms;  // (shift, sign)

  static ShiftSum identity(int d) {
    ShiftSum s;
    s.terms.push_back({std::vector<double>(d, 0.0), 1.0});
    return s;
  }

  ShiftSum with_delta(const std::vector<double>& y, const std::vector<double>& z) const {
    ShiftSum out;
    out.terms.reserve(terms.size() * 2);
    for (const auto& [s, sg] : terms) {
      auto sy = s, sz = s;
      for (size_t k = 0; k < s.size(); ++k) {
        sy[k] += y[k];
        sz[k] += z[k];
      }
      out.terms.push_back({sy, sg});
      out.terms.push_back({sz, -sg});
    }
    return out;
  }

  TensorFieldFn compose(const TensorFieldFn& f) const {
    TensorFieldFn g;
    g.d = f.d;
    g.entries = f.entries;
    auto terms_copy = terms;
    g.eval = [f, terms_copy](const double* x, double* out) {
      std::vector<double> p(f.d), tmp(f.entries);
      for (int e = 0; e < f.entries; ++e) out[e] = 0.0;
      for (const auto& [s, sg] : terms_copy) {
        for (int k = 0; k < f.d; ++k) p[k] = x[k] + s[k];
        f.eval(p.data(), tmp.data());
        for (int e = 0; e < f.entries; ++e) out[e] += sg * tmp[e];
      }
    };
    return g;
  }
};

/// Candidate lattice for the inf stage: axis-aligned lattice with spacing
/// `spacing` intersected with the Euclidean ball |z| <= L (nested as L grows).
inline std::vector<std::vector<double>> shift_lattice(int d, double L, double spacing) {
  std::vector<std::vector<double>> out;
  int kmax = static_cast<int>(std::floor(L / spacing));
  if (d == 1) {
    for (int k = -kmax; k <= kmax; ++k) out.push_back({k * spacing});
  } else {
    for (int k1 = -kmax; k1 <= kmax; ++k1)
      for (int k2 = -kmax; k2 <= kmax; ++k2) {
        double z1 = k1 * spacing, z2 = k2 * spacing;
        if (z1 * z1 + z2 * z2 <= L * L) out.push_back({z1, z2});
      }
  }
  return out;
}

/// Pattern-search refinement of z within the ball |z| <= L, step-halving.
template <class Objective>
std::vector<double> refine_shift(const Objective& obj, std::vector<double> z, double L, double step,
                                 int rounds, double* best_val) {
  int d = static_cast<int>(z.size());
  double cur = *best_val;
  for (int r = 0; r < rounds; ++r) {
    bool improved = false;
    for (int k = 0; k < d; ++k) {
      for (double sgn : {+1.0, -1.0}) {
        auto cand = z;
        cand[k] += sgn * step;
        double nrm = 0;
        for (double v : cand) nrm += v * v;
        if (nrm > L * L) continue;
        double v = obj(cand);
        if (v < cur) {
          cur = v;
          z = cand;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
    if (step < 1e-13) break;
  }
  *best_val = cur;
  return z;
}

}  // namespace detail

/// omega_k(f; L, R): nested sup_y inf_{|z|<=L} of the k-fold difference norm.
/// The sup stages are sampled (lower-biased), the inf stages use a candidate
/// lattice plus local refinement (upper-biased); the estimate carries both biases.
inline double omega_k(const TensorFieldFn& f, int k, double L, double R, const SamplerConfig& cfg) {
  cfg.validate();
  if (k < 1 || k > 3) throw ConfigError("omega_k supports 1 <= k <= 3");
  if (L <= 0 || R <= 0) throw ConfigError("omega_k needs L, R > 0");
  const int shrink = (k >= 2) ? 1 << (2 * (k - 1)) : 1;
  const int ny = std::max(4, cfg.center_samples / shrink);
  const int nz = std::max(4, cfg.shift_candidates / shrink);
  auto ycands = detail::halton_box(f.d, ny, cfg.sup_radius, cfg.seed + 101);
  const double spacing = 2.0 * L / nz;

  std::function<double(int, const detail::ShiftSum&)> level = [&](int depth,
                                                                  const detail::ShiftSum& acc) -> double {
    if (depth == k) {
      return norm_SpR(acc.compose(f), 2.0, R, cfg);
    }
    double sup = 0.0;
    for (const auto& y : ycands) {
      auto objective = [&](const std::vector<double>& z) { return level(depth + 1, acc.with_delta(y, z)); };
      double best = 1e300;
      std::vector<double> bestz(f.d, 0.0);
      for (const auto& z : detail::shift_lattice(f.d, L, spacing)) {
        double v = objective(z);
        if (v < best) {
          best = v;
          bestz = z;
        }
      }
      detail::refine_shift(objective, bestz, L, spacing, cfg.refine_rounds, &best);
      sup = std::max(sup, best);
    }
    return sup;
  };
  return level(0, detail::ShiftSum::identity(f.d));
}

namespace detail {

/// Set partitions of {0..k-1} into nonempty blocks, k <= 3.
inline std::vector<std::vector<std::vector<int>>> set_partitions(int k) {
  if (k == 1) return {{{0}}};
  if (k == 2) return {{{0, 1}}, {{0}, {1}}};
  if (k == 3)
    return {{{0, 1, 2}}, {{0, 1}, {2}}, {{0, 2}, {1}}, {{1, 2}, {0}}, {{0}, {1}, {2}}};
  throw ConfigError("set_partitions supports k <= 3");
}

}  // namespace detail

/// rho_k(L, R): nested sup/inf of the partition-product difference functional
/// of the coefficient field (Frobenius magnitude over the tensor entries).
inline double rho_k(const CoeffField& field, int k, double L, double R, double p,
                    const SamplerConfig& cfg) {
  cfg.validate();
  if (k < 1 || k > 3) throw ConfigError("rho_k supports 1 <= k <= 3");
  if (p < 2) throw ConfigError("rho_k needs p >= 2");
  const TensorFieldFn f = field.as_fn();
  const int shrink = (k >= 2) ? 1 << (2 * (k - 1)) : 1;
  const int ny = std::max(4, cfg.center_samples / shrink);
  const int nz = std::max(4, cfg.shift_candidates / shrink);
  auto ycands = detail::halton_box(field.d, ny, cfg.sup_radius, cfg.seed + 211);
  const double spacing = 2.0 * L / nz;
  auto partitions = detail::set_partitions(k);

  // leaf objective: given all k pairs, sum over partitions of the product of block norms
  auto leaf = [&](const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs) {
    // cache block norms over the 2^k - 1 nonempty subsets
    std::vector<double> norm_of(1 << k, -1.0);
    auto block_norm = [&](const std::vector<int>& block) {
      int mask = 0;
      for (int b : block) mask |= 1 << b;
      if (norm_of[mask] >= 0) return norm_of[mask];
      auto acc = detail::ShiftSum::identity(field.d);
      for (int b : block) acc = acc.with_delta(pairs[b].first, pairs[b].second);
      double v = norm_SpR(acc.compose(f), p, R, cfg);
      norm_of[mask] = v;
      return v;
    };
    double sum = 0.0;
    for (const auto& part : partitions) {
      double prod = 1.0;
      for (const auto& block : part) prod *= block_norm(block);
      sum += prod;
    }
    return sum;
  };

  std::function<double(int, std::vector<std::pair<std::vector<double>, std::vector<double>>>&)> level =
      [&](int depth, std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs) -> double {
    if (depth == k) return leaf(pairs);
    double sup = 0.0;
    for (const auto& y : ycands) {
      auto objective = [&](const std::vector<double>& z) {
        pairs.push_back({y, z});
        double v = level(depth + 1, pairs);
        pairs.pop_back();
        return v;
      };
      double best = 1e300;
      std::vector<double> bestz(field.d, 0.0);
      for (const auto& z : detail::shift_lattice(field.d, L, spacing)) {
        double v = objective(z);
        if (v < best) {
          best = v;
          bestz = z;
        }
      }
      detail::refine_shift(objective, bestz, L, spacing, cfg.refine_rounds, &best);
      sup = std::max(sup, best);
    }
    return sup;
  };
  std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
  return level(0, pairs);
}

/// Least-squares decay exponent of rho_k(L, L) over an increasing L list.
/// Returns theta_hat (the +inf sentinel when rho vanishes) and the fit residual.
struct RhoDecayFit {
  double theta_hat = 0.0;
  double residual = 0.0;
  bool is_infinite = false;
  std::vector<double> rho_values;
};

/// rho_k along an increasing L chain with nested candidate sets: the lattice
/// spacing is fixed from the smallest L and each stage seeds the refinement
/// with the previous L's minimizer, so the estimates are non-increasing in L.
inline std::vector<double> rho_k_chain(const CoeffField& field, int k, const std::vector<double>& L_list,
                                       const std::vector<double>& R_list, double p,
                                       const SamplerConfig& cfg) {
  cfg.validate();
  if (L_list.size() != R_list.size()) throw ConfigError("rho_k_chain needs |L_list| == |R_list|");
  if (k != 1) {
    // the chain refinement is only wired for k=1 (the lab's main use);
    // higher k falls back to independent estimates
    std::vector<double> out;
    for (size_t i = 0; i < L_list.size(); ++i)
      out.push_back(rho_k(field, k, L_list[i], R_list[i], p, cfg));
    return out;
  }
  const TensorFieldFn f = field.as_fn();
  const int ny = std::max(4, cfg.center_samples);
  const int nz = std::max(4, cfg.shift_candidates);
  auto ycands = detail::halton_box(field.d, ny, cfg.sup_radius, cfg.seed + 211);
  const double spacing = 2.0 * L_list.front() / nz;

  std::vector<double> out;
  std::vector<std::vector<double>> warm(ycands.size(), std::vector<double>(field.d, 0.0));
  for (size_t li = 0; li < L_list.size(); ++li) {
    const double L = L_list[li];
    const double R = R_list[li];
    double sup = 0.0;
    for (size_t yi = 0; yi < ycands.size(); ++yi) {
      const auto& y = ycands[yi];
      auto objective = [&](const std::vector<double>& z) {
        auto acc = detail::ShiftSum::identity(field.d).with_delta(y, z);
        return norm_SpR(acc.compose(f), p, R, cfg);
      };
      double best = objective(warm[yi]);
      std::vector<double> bestz = warm[yi];
      for (const auto& z : detail::shift_lattice(field.d, L, spacing)) {
        double v = objective(z);
        if (v < best) {
          best = v;
          bestz = z;
        }
      }
      bestz = detail::refine_shift(objective, bestz, L, spacing, cfg.refine_rounds, &best);
      warm[yi] = bestz;
      sup = std::max(sup, best);
    }
    out.push_back(sup);
  }
  return out;
}

inline RhoDecayFit fit_rho_decay(const CoeffField& field, int k, const std::vector<double>& L_list,
                                 double p, const SamplerConfig& cfg) {
  if (L_list.size() < 3) throw ConfigError("fit_rho_decay needs >= 3 increasing L values");
  for (size_t i = 1; i < L_list.size(); ++i)
    if (!(L_list[i] > L_list[i - 1])) throw ConfigError("fit_rho_decay needs increasing L");
  RhoDecayFit out;
  out.rho_values = rho_k_chain(field, k, L_list, L_list, p, cfg);
  ThetaFit tf = fit_theta(L_list, out.rho_values);
  out.theta_hat = tf.theta_hat;
  out.residual = tf.residual;
  out.is_infinite = tf.is_infinite;
  return out;
}

}  // namespace aphlab

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aphlab/bvp.hpp"
#include "aphlab/fitting.hpp"

using namespace aphlab;

namespace {

const double TWO_PI = 2.0 * M_PI;

TensorFieldFn scalar_fn(std::function<double(double)> f) {
  TensorFieldFn g;
  g.d = 1;
  g.entries = 1;
  g.eval = [f](const double* x, double* o) { *o = f(x[0]); };
  return g;
}

SolverConfig solver(double tol = 1e-10) {
  SolverConfig cfg;
  cfg.rel_tol = tol;
  cfg.prec = SolverConfig::Prec::symbol;
  return cfg;
}

double max_err_against(const GridField& u, const BoxDomain& dom, std::function<double(double)> exact) {
  double err = 0;
  std::vector<double> x(1);
  for (long p = 0; p < dom.grid().num_nodes(); ++p) {
    dom.grid().point(p, x.data());
    err = std::max(err, std::fabs(u.at(p, 0) - exact(x[0])));
  }
  return err;
}

}  // namespace

TEST_CASE("solve_eps_problem") {
  SUBCASE("f = 0 gives u = 0") {
    auto f = CoeffField::constant_identity(1, 1, 1, 1.0, 1.0);
    BoxDomain dom{1, 1.0, 128, 1};
    DirichletProblem pr;
    pr.field = f;
    pr.eps = 0.5;
    pr.f = scalar_fn([](double) { return 0.0; });
    auto u = solve_eps_problem(pr, dom, solver());
    for (double v : u.values) CHECK(v == 0.0);
  }
  SUBCASE("constant A=1, m=1: f = pi^2 sin(pi x) gives sin(pi x) to O(h)") {
    auto f = CoeffField::constant_identity(1, 1, 1, 1.0, 1.0);
    double prev = -1;
    for (int n : {128, 256, 512}) {
      BoxDomain dom{1, 1.0, n, 1};
      DirichletProblem pr;
      pr.field = f;
      pr.eps = 0.5;
      pr.f = scalar_fn([](double x) { return M_PI * M_PI * std::sin(M_PI * x); });
      auto u = solve_eps_problem(pr, dom, solver());
      double err = max_err_against(u, dom, [](double x) { return std::sin(M_PI * x); });
      CHECK(err < 8.0 * M_PI / n);  // O(h)
      if (prev > 0) CHECK(err < prev);
      prev = err;
    }
  }
  SUBCASE("resolution guard") {
    auto f = CoeffField::constant_identity(1, 1, 1, 1.0, 1.0);
    BoxDomain dom{1, 1.0, 64, 1};
    DirichletProblem pr;
    pr.field = f;
    pr.eps = 1.0 / 16;
    pr.f = scalar_fn([](double) { return 1.0; });
    CHECK_THROWS_AS(solve_eps_problem(pr, dom, solver()), ResolutionTooCoarse);
  }
  SUBCASE("eps-problem with constant A equals the homogenized solve exactly") {
    // rel_tol sits above the double-precision residual floor of the 4th-order stencil
    auto f = CoeffField::constant_identity(1, 2, 1, 1.0, 1.0);
    BoxDomain dom{1, 1.0, 256, 2};
    DirichletProblem pr;
    pr.field = f;
    pr.eps = 1.0 / 8;
    pr.f = scalar_fn([](double x) { return std::sin(M_PI * x); });
    auto ue = solve_eps_problem(pr, dom, solver(1e-8));
    HomogenizedTensor H;
    H.d = 1;
    H.m = 2;
    H.n = 1;
    H.mu = 1.0;
    H.values = {1.0};
    auto u0 = solve_homogenized(H, pr.f, dom, solver(1e-8));
    GridField diff = ue;
    diff -= u0;
    CHECK(grid_norm(diff, GridNormKind::L2) <= 1e-12);
  }
}

TEST_CASE("solve_homogenized: clamped-beam polynomial oracle") {
  // u'''' = 1 on (0,1), u = u' = 0 at both ends: u = x^2 (1-x)^2 / 24
  HomogenizedTensor H;
  H.d = 1;
  H.m = 2;
  H.n = 1;
  H.mu = 1.0;
  H.values = {1.0};
  auto f = scalar_fn([](double) { return 1.0; });
  double prev = -1;
  for (int n : {128, 256}) {
    BoxDomain dom{1, 1.0, n, 2};
    auto u = solve_homogenized(H, f, dom, solver(1e-8));
    auto exact = [](double x) { return x * x * (1 - x) * (1 - x) / 24.0; };
    double err = max_err_against(u, dom, exact) / (1.0 / 384.0);
    CHECK(err < 32.0 / n);  // O(h) relative to ||u||_inf
    if (prev > 0) CHECK(err < prev);
    prev = err;
  }
  SUBCASE("zero source") {
    BoxDomain dom{1, 1.0, 64, 2};
    auto u = solve_homogenized(H, scalar_fn([](double) { return 0.0; }), dom, solver(1e-8));
    for (double v : u.values) CHECK(v == 0.0);
  }
}

TEST_CASE("mollify_S") {
  TorusGrid g{1, 1.0, 256};
  SUBCASE("constants are preserved exactly and the kernel nevers increase norms") {
    GridField u(g, 1);
    for (auto& v : u.values) v = 3.25;
    auto s = mollify_S(u, 1.0 / 16);
    for (double v : s.values) CHECK(v == doctest::Approx(3.25).epsilon(1e-14));
  }
  SUBCASE("L1, L2, Linf norms never increase") {
    GridField u(g, 1);
    std::vector<double> x(1);
    for (long p = 0; p < g.num_nodes(); ++p) {
      g.point(p, x.data());
      u.at(p, 0) = std::sin(TWO_PI * 3 * x[0]) + 0.3 * std::cos(TWO_PI * 11 * x[0]);
    }
    auto s = mollify_S(u, 1.0 / 16);
    auto norms = [&](const GridField& w) {
      double l1 = 0, l2 = 0, li = 0;
      for (double v : w.values) {
        l1 += std::fabs(v);
        l2 += v * v;
        li = std::max(li, std::fabs(v));
      }
      return std::array<double, 3>{l1, std::sqrt(l2), li};
    };
    auto nu = norms(u), ns = norms(s);
    for (int i = 0; i < 3; ++i) CHECK(ns[i] <= nu[i] * (1 + 1e-12));
  }
  SUBCASE("smoothing error bounded by eps ||grad f||") {
    std::vector<double> x(1);
    double prev_ratio = 1e300;
    for (double eps : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
      GridField u(g, 1);
      for (long p = 0; p < g.num_nodes(); ++p) {
        g.point(p, x.data());
        u.at(p, 0) = std::sin(TWO_PI * x[0]);
      }
      auto s = mollify_S(u, eps);
      GridField diff = s;
      diff -= u;
      auto du = apply_Dalpha(u, MultiIndex{{1}}, DiffVariant::forward);
      const double ratio =
          grid_norm(diff, GridNormKind::L2) / (eps * grid_norm(du, GridNormKind::L2));
      CHECK(ratio <= 1.0);           // the measured constant is bounded
      CHECK(ratio <= prev_ratio * 1.05);
      prev_ratio = ratio;
    }
  }
  SUBCASE("underresolved kernel rejected") {
    GridField u(g, 1);
    CHECK_THROWS_AS(mollify_S(u, 1.0 / 256), KernelUnderresolved);
  }
}

TEST_CASE("cutoff_eta") {
  BoxDomain dom{1, 1.0, 256, 1};
  for (int m : {1, 2}) {
    for (double delta : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
      auto eta = cutoff_eta(dom, delta, m);
      std::vector<double> x(1);
      double max_d1 = 0;
      for (long p = 0; p < dom.grid().num_nodes(); ++p) {
        dom.grid().point(p, x.data());
        const double dist = dom.dist_to_boundary(x.data());
        if (dist < delta) CHECK(eta.at(p, 0) == 0.0);
        if (dist > 2 * delta) CHECK(eta.at(p, 0) == 1.0);
      }
      auto d1 = apply_Dalpha(eta, MultiIndex{{1}}, DiffVariant::forward);
      for (double v : d1.values) max_d1 = std::max(max_d1, std::fabs(v));
      CHECK(max_d1 * delta < 2.0);  // smoothstep slope bound: 1.5 (m=1), 1.875 (m=2)
    }
  }
}

TEST_CASE("K_eps_delta") {
  BoxDomain dom{1, 1.0, 256, 1};
  TorusGrid g = dom.grid();
  SUBCASE("f = 1: equals 1 well inside, zero near the boundary") {
    GridField one(g, 1);
    for (auto& v : one.values) v = 1.0;
    SmoothingConfig sc{1.0 / 32, 1.0 / 8};
    auto k = K_eps_delta(one, sc, dom, 1);
    std::vector<double> x(1);
    for (long p = 0; p < g.num_nodes(); ++p) {
      g.point(p, x.data());
      const double dist = dom.dist_to_boundary(x.data());
      if (dist > 2 * sc.delta + sc.eps) CHECK(k.at(p, 0) == doctest::Approx(1.0).epsilon(1e-12));
      if (dist < sc.eps - 1e-12) CHECK(std::fabs(k.at(p, 0)) <= 1e-12);
    }
  }
  SUBCASE("f = 0 -> 0") {
    GridField z(g, 1);
    SmoothingConfig sc{1.0 / 32, 1.0 / 8};
    auto k = K_eps_delta(z, sc, dom, 1);
    for (double v : k.values) CHECK(v == 0.0);
  }
  SUBCASE("support check passes iff delta >= 2 eps") {
    GridField one(g, 1);
    for (auto& v : one.values) v = 1.0;
    CHECK_NOTHROW(K_eps_delta(one, SmoothingConfig{1.0 / 32, 1.0 / 16}, dom, 1));
    CHECK_THROWS_AS(K_eps_delta(one, SmoothingConfig{1.0 / 8, 1.0 / 16}, dom, 1), ConfigError);
  }
}

TEST_CASE("two_scale_error") {
  SUBCASE("constant A: omega = u_eps - u_0 = 0") {
    auto f = CoeffField::constant_identity(1, 1, 1, 1.0, 1.0);
    const double eps = 1.0 / 8;
    BoxDomain dom{1, 1.0, 256, 1};
    DirichletProblem pr;
    pr.field = f;
    pr.eps = eps;
    pr.f = scalar_fn([](double x) { return std::sin(M_PI * x); });
    auto ue = solve_eps_problem(pr, dom, solver());
    HomogenizedTensor H;
    H.d = 1;
    H.m = 1;
    H.n = 1;
    H.mu = 1.0;
    H.values = {1.0};
    auto u0 = solve_homogenized(H, pr.f, dom, solver());
    // corrector grid: h_c = h/eps, extent covering 1/eps
    TorusGrid cg{1, 8.0, static_cast<int>(8.0 * eps * 256)};
    auto set = solve_approx_corrector(f, 1.0 / eps, cg, solver());
    SmoothingConfig sc{eps, std::max(2 * eps, 1.0 / 16)};
    auto ts = two_scale_error(ue, u0, set, sc, dom);
    CHECK(ts.diff_L2 <= 1e-10);
    CHECK(ts.omega_L2 <= 1e-10);
  }
  SUBCASE("periodic 1-D m=1: L2 error decays ~ eps and omega_Hm < diff_Hm") {
    auto f = CoeffField::scalar_1d(1, 2.0, {1.0}, {TWO_PI}, {0.0}, 1.0 / 3, "p");
    TorusGrid ag{1, 1.0, 512};
    SolverConfig cfg = solver();
    auto aset = solve_approx_corrector(f, 64.0, ag, cfg);
    auto H = compute_Ahat(f, aset);
    std::vector<double> errs;
    for (double eps : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
      const int n = static_cast<int>(std::llround(16.0 / eps));
      BoxDomain dom{1, 1.0, n, 1};
      DirichletProblem pr;
      pr.field = f;
      pr.eps = eps;
      pr.f = scalar_fn([](double x) { return std::sin(M_PI * x); });
      auto ue = solve_eps_problem(pr, dom, cfg);
      auto u0 = solve_homogenized(H, pr.f, dom, cfg);
      double extent_c = std::ceil(std::max(8.0 / eps, 1.0 / eps));
      TorusGrid cg{1, extent_c, static_cast<int>(std::llround(extent_c * 16))};
      auto set = solve_approx_corrector(f, 1.0 / eps, cg, cfg);
      SmoothingConfig sc{eps, std::max(2 * eps, 1.0 / 16)};
      auto ts = two_scale_error(ue, u0, set, sc, dom);
      errs.push_back(ts.diff_L2);
      CHECK(ts.omega_Hm < ts.diff_Hm);  // corrector captures the oscillation
    }
    auto fit = loglog_fit({1.0 / 8, 1.0 / 16, 1.0 / 32}, errs);
    CHECK(fit.slope >= 0.9);
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <kahlerlab/jacobi.hpp>
#include <kahlerlab/rng.hpp>

#include <cmath>
#include <numbers>

using namespace kahlerlab;

namespace {
constexpr double kPi = std::numbers::pi;

ScalarField<> cosk(const GridPtr& g, int k, double amp = 1.0) {
  ScalarField<> f(g);
  for (Eigen::Index p = 0; p < g->size(); ++p)
    f.values()[p] = amp * std::cos(2 * kPi * k * g->coord(p, 0));
  return f;
}

KahlerPotential<> flat_potential(const GridPtr& g) {
  return build_potential(Background<>::flat(g), ScalarField<>(g));
}

/// Unit-speed Calabi setup: psi0 with g_C(psi0, psi0) = 1 and an orthogonal
/// unit w0, both through single modes.
struct SphereSetup {
  KahlerPotential<> P0;
  ScalarField<> psi0, w0;
};

SphereSetup sphere_setup(const GridPtr& g) {
  SphereSetup s{flat_potential(g), ScalarField<>(g), ScalarField<>(g)};
  s.psi0 = poisson_solve(s.P0, cosk(g, 1, std::sqrt(2.0))).u;
  s.w0 = poisson_solve(s.P0, cosk(g, 2, std::sqrt(2.0))).u;
  return s;
}
}  // namespace

TEST_CASE("jacobi rhs: zero section and homogeneity") {
  auto g = make_grid(1, 32);
  KahlerPotential<> P = flat_potential(g);
  Rng rng(3);
  ScalarField<> psi = tangent_project(P, random_band_limited(g, 2, rng, 0.2));
  MetricParams<> params = MetricParams<>::sum();
  auto acc = acceleration(P, psi, params);

  ScalarField<> zero(g);
  ScalarField<> w0 = jacobi_rhs(P, psi, acc.psi_dot, zero, zero, params);
  CHECK(w0.max_abs() <= 1e-12);

  ScalarField<> v = random_band_limited(g, 2, rng, 0.1);
  ScalarField<> w = random_band_limited(g, 2, rng, 0.1);
  ScalarField<> r1 = jacobi_rhs(P, psi, acc.psi_dot, v, w, params);
  ScalarField<> r2 = jacobi_rhs(P, psi, acc.psi_dot, 2.0 * v, 2.0 * w, params);
  CHECK((r2.values() - 2 * r1.values()).abs().maxCoeff() <=
        1e-10 * std::max(1.0, r1.max_abs()));
}

TEST_CASE("jacobi rhs linearizes the acceleration (directional check)") {
  auto g = make_grid(1, 32);
  auto bg = Background<>::flat(g);
  Rng rng(11);
  ScalarField<> phi = scale_to_margin(bg, random_band_limited(g, 2, rng), 0.85);
  KahlerPotential<> P = build_potential(bg, phi);
  ScalarField<> psi = tangent_project(P, random_band_limited(g, 2, rng, 0.2));
  ScalarField<> v = random_band_limited(g, 2, rng, 1.0);
  ScalarField<> w = random_band_limited(g, 2, rng, 1.0);

  for (MetricParams<> params :
       {MetricParams<>::sum(), MetricParams<>{1, 0.5, 0},
        MetricParams<>::calabi()}) {
    auto acc = acceleration(P, psi, params);
    ScalarField<> lin = jacobi_rhs(P, psi, acc.psi_dot, v, w, params);
    // centered difference of the full acceleration map (both the potential
    // and the velocity perturbed), tangency policy included
    const double eps = 1e-5;
    auto acc_at = [&](double s) {
      KahlerPotential<> Q = build_potential(bg, phi + s * v);
      return acceleration(Q, psi + s * w, params).psi_dot;
    };
    ScalarField<> fd = (1.0 / (2 * eps)) * (acc_at(eps) - acc_at(-eps));
    const double scale = std::max(1.0, lin.max_abs());
    CHECK((fd.values() - lin.values()).abs().maxCoeff() / scale <= 1e-5);
  }
}

TEST_CASE("trivial Jacobi solutions along any geodesic") {
  auto g = make_grid(1, 32);
  auto s = sphere_setup(g);
  MetricParams<> params = MetricParams<>::calabi();
  const double dt = 1e-3, T = 0.05;
  Trajectory<> tr = integrate_geodesic(s.P0, s.psi0, params, dt, T);
  auto acc0 = acceleration(s.P0, s.psi0, params);

  // time translation: J(t) = psi(t)
  JacobiSeries<> a = integrate_jacobi(tr, s.psi0, acc0.psi_dot);
  double e1 = 0;
  for (std::size_t k = 0; k < tr.states.size(); k += 10)
    e1 = std::max(e1, (a.states[k].v.values() - tr.states[k].psi.values())
                          .abs().maxCoeff());
  CHECK(e1 <= 1e-8);

  // affine reparameterization: J(t) = t psi(t)
  JacobiSeries<> b = integrate_jacobi(tr, ScalarField<>(g), s.psi0);
  double e2 = 0;
  for (std::size_t k = 0; k < tr.states.size(); k += 10)
    e2 = std::max(e2, (b.states[k].v.values() -
                       tr.states[k].t * tr.states[k].psi.values())
                          .abs().maxCoeff());
  CHECK(e2 <= 1e-8);
}

TEST_CASE("superposition of the Jacobi flow") {
  auto g = make_grid(1, 32);
  auto s = sphere_setup(g);
  MetricParams<> params = MetricParams<>::calabi();
  Trajectory<> tr = integrate_geodesic(s.P0, s.psi0, params, 1e-3, 0.03);
  Rng rng(5);
  ScalarField<> v1 = random_band_limited(g, 2, rng, 0.3);
  ScalarField<> w1 = random_band_limited(g, 2, rng, 0.3);
  ScalarField<> v2 = random_band_limited(g, 2, rng, 0.3);
  ScalarField<> w2 = random_band_limited(g, 2, rng, 0.3);
  JacobiSeries<> ja = integrate_jacobi(tr, v1, w1);
  JacobiSeries<> jb = integrate_jacobi(tr, v2, w2);
  JacobiSeries<> jc = integrate_jacobi(tr, v1 + v2, w1 + w2);
  const auto& last = jc.states.back();
  CHECK((last.v.values() - ja.states.back().v.values() -
         jb.states.back().v.values()).abs().maxCoeff() <= 1e-9);
  CHECK((last.w.values() - ja.states.back().w.values() -
         jb.states.back().w.values()).abs().maxCoeff() <= 1e-9);
}

TEST_CASE("Calabi Jacobi norm reproduces the sphere model") {
  auto g = make_grid(1, 32);
  auto s = sphere_setup(g);
  MetricParams<> params = MetricParams<>::calabi();
  const double dt = 1e-3, T = 0.5;
  CHECK(calabi_inner(s.P0, s.psi0, s.psi0) == doctest::Approx(1.0));
  CHECK(calabi_inner(s.P0, s.w0, s.w0) == doctest::Approx(1.0));
  CHECK(std::abs(calabi_inner(s.P0, s.w0, s.psi0)) <= 1e-12);

  Trajectory<> tr = integrate_geodesic(s.P0, s.psi0, params, dt, T);
  JacobiSeries<> J = integrate_jacobi(tr, ScalarField<>(g), s.w0);
  double emax = 0;
  for (std::size_t k = 0; k < J.norms.size(); k += 25) {
    const double t = tr.states[k].t;
    emax = std::max(emax, std::abs(J.norms[k] - 2 * std::sin(t / 2)));
  }
  CHECK(emax <= 1e-6);

  // the paper's variant formula |sin(2t)|/1 is tabulated, not asserted:
  // at t = 0.5 it differs from the sphere value by an O(1) factor
  const double t = tr.states.back().t;
  CHECK(std::abs(std::sin(2 * t)) != doctest::Approx(2 * std::sin(t / 2)));
}

TEST_CASE("finite-difference oracle agrees and sharpens with eps") {
  auto g = make_grid(1, 32);
  auto s = sphere_setup(g);
  MetricParams<> params = MetricParams<>::calabi();
  const double dt = 1e-3, T = 0.1;
  Trajectory<> tr = integrate_geodesic(s.P0, s.psi0, params, dt, T);
  JacobiSeries<> lin = integrate_jacobi(tr, ScalarField<>(g), s.w0);

  auto fd_gap = [&](double eps) {
    ScalarField<> Jfd =
        jacobi_fd_oracle(s.P0, s.psi0, s.w0, params, T, eps, dt);
    const double scale = lin.norms.back();
    return (Jfd.values() - lin.states.back().v.values()).abs().maxCoeff() /
           scale;
  };
  const double g1 = fd_gap(1e-3);
  const double g2 = fd_gap(5e-4);
  CHECK(g1 <= 5e-3);
  CHECK(g2 <= 0.65 * g1);  // first-order in eps
  CHECK(fd_gap(1e-4) <= 5e-3);

  // w = 0: oracle vanishes identically
  ScalarField<> z =
      jacobi_fd_oracle(s.P0, s.psi0, ScalarField<>(g), params, 0.05, 1e-4, dt);
  CHECK(z.max_abs() <= 1e-12);
}

TEST_CASE("sectional curvature: Calabi constant, gradient flatness, Mabuchi sign") {
  auto g = make_grid(1, 32);
  auto bg = Background<>::flat(g);
  Rng rng(17);
  ScalarField<> phi = scale_to_margin(bg, random_band_limited(g, 2, rng), 0.8);
  KahlerPotential<> P = build_potential(bg, phi);

  for (int trial = 0; trial < 10; ++trial) {
    ScalarField<> a = tangent_project(P, random_band_limited(g, 3, rng));
    ScalarField<> b = tangent_project(P, random_band_limited(g, 3, rng));
    auto kc = sectional_curvature(P, a, b, CurvatureMetric::Calabi);
    CHECK(kc.normalized == doctest::Approx(0.25).epsilon(1e-12));
    auto kg = sectional_curvature(P, a, b, CurvatureMetric::Gradient);
    CHECK(std::abs(kg.normalized) <= 1e-6);
    auto km = sectional_curvature(P, a, b, CurvatureMetric::Mabuchi);
    CHECK(km.normalized <= 1e-10);
  }

  // plane dependence only: swap symmetry and shear invariance
  ScalarField<> a = tangent_project(P, random_band_limited(g, 3, rng));
  ScalarField<> b = tangent_project(P, random_band_limited(g, 3, rng));
  auto k1 = sectional_curvature(P, a, b, CurvatureMetric::Mabuchi);
  auto k2 = sectional_curvature(P, b, a, CurvatureMetric::Mabuchi);
  CHECK(k1.numerator == doctest::Approx(k2.numerator).epsilon(1e-8));
  ScalarField<> sheared = a + 0.7 * b;
  auto k3 = sectional_curvature(P, sheared, b, CurvatureMetric::Mabuchi);
  CHECK(k3.normalized == doctest::Approx(k1.normalized).epsilon(1e-8));

  CHECK_THROWS_AS(
      sectional_curvature(P, a, 2.0 * a, CurvatureMetric::Gradient),
      DegeneratePlane);
}

TEST_CASE("Mabuchi curvature in two complex dimensions is nonpositive") {
  auto g = make_grid(2, 16);
  auto bg = Background<>::flat(g);
  Rng rng(23);
  ScalarField<> phi = scale_to_margin(bg, random_band_limited(g, 1, rng), 0.8);
  KahlerPotential<> P = build_potential(bg, phi);
  for (int trial = 0; trial < 3; ++trial) {
    ScalarField<> a = tangent_project(P, random_band_limited(g, 2, rng));
    ScalarField<> b = tangent_project(P, random_band_limited(g, 2, rng));
    auto km = sectional_curvature(P, a, b, CurvatureMetric::Mabuchi);
    CHECK(km.normalized <= 1e-10);
    // in n = 2 the bracket is generically nonzero: strictly negative K_M
    CHECK(km.normalized < 0);
  }
}

TEST_CASE("rauch report columns") {
  auto g = make_grid(1, 32);
  KahlerPotential<> P0 = flat_potential(g);
  ScalarField<> psi0 = poisson_solve(P0, cosk(g, 1, 1.0)).u;
  psi0 *= 1 / std::sqrt(dirichlet_inner(P0, psi0, psi0));
  MetricParams<> grad = MetricParams<>::dirichlet();
  Trajectory<> tr = integrate_geodesic(P0, psi0, grad, 1e-3, 0.1);
  Rng rng(31);
  auto rows = rauch_report(tr, cosk(g, 2, 1.0), 4, rng, 20);

  CHECK(rows.front().t == 0.0);
  CHECK(rows.front().jacobi_norm <= 1e-12);
  CHECK(rows.front().paper_bound == 0.0);
  CHECK(rows.front().sphere_norm == 0.0);
  // small-t growth ||J(t)|| = t + O(t^3)
  for (const auto& r : rows)
    if (r.t > 0) CHECK(std::abs(r.jacobi_norm - r.t) <= 0.05 * r.t + 1e-9);
  // the flat n=1 gradient probe sees zero curvature
  for (const auto& r : rows) {
    CHECK(std::abs(r.kg_min) <= 1e-6);
    CHECK(std::abs(r.kg_max) <= 1e-6);
  }

  Trajectory<> wrong = integrate_geodesic(P0, psi0, MetricParams<>::sum(),
                                          1e-2, 0.02);
  CHECK_THROWS_AS(rauch_report(wrong, cosk(g, 2, 1.0), 1, rng, 5),
                  WrongParams);
}

TEST_CASE("rauch table on a Calabi trajectory reproduces its own column") {
  auto g = make_grid(1, 32);
  auto s = sphere_setup(g);
  Trajectory<> tr =
      integrate_geodesic(s.P0, s.psi0, MetricParams<>::calabi(), 1e-3, 0.3);
  Rng rng(41);
  auto rows = rauch_report(tr, s.w0, 0, rng, 50);
  for (const auto& r : rows)
    CHECK(std::abs(r.jacobi_norm - r.sphere_norm) <= 1e-6);
}

TEST_CASE("conjugate scan stays bounded below the antipode scale") {
  auto g = make_grid(1, 32);
  auto s = sphere_setup(g);
  Rng rng(7);
  // Calabi metric: first conjugate time would be pi R = 2 pi at unit speed;
  // scan far below it
  auto scan = conjugate_scan(s.P0, s.psi0, MetricParams<>::calabi(), 0.2, 3,
                             2e-3, 1e-4, rng, {}, 10);
  CHECK(scan.candidate_times.empty());
  // sigma_min ~ t: monotone growth
  for (std::size_t k = 1; k < scan.sigma_min.size(); ++k)
    CHECK(scan.sigma_min[k] > scan.sigma_min[k - 1] - 1e-12);

  // flat gradient: sigma_min stays bounded below as well
  KahlerPotential<> P0 = flat_potential(g);
  ScalarField<> psi0 = poisson_solve(P0, cosk(g, 1, 0.5)).u;
  auto scan2 = conjugate_scan(P0, psi0, MetricParams<>::dirichlet(), 0.2, 2,
                              2e-3, 1e-4, rng, {}, 10);
  CHECK(scan2.candidate_times.empty());

  // probe_count = 1: the scan reduces to a single curve norm
  auto scan1 = conjugate_scan(s.P0, s.psi0, MetricParams<>::calabi(), 0.05, 1,
                              2e-3, 1e-4, rng, {}, 5);
  CHECK(scan1.sigma_min.back() > 0);
}

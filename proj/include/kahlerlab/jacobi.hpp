#ifndef KAHLERLAB_JACOBI_HPP
#define KAHLERLAB_JACOBI_HPP

#include <Eigen/Eigenvalues>

#include "kahlerlab/geodesic.hpp"
#include "kahlerlab/rng.hpp"

namespace kahlerlab {

template <typename S = double>
struct JacobiState {
  S t = 0;
  ScalarField<S> v;  // variation of phi
  ScalarField<S> w;  // variation of psi
};

template <typename S = double>
struct JacobiSeries {
  std::vector<JacobiState<S>> states;
  std::vector<S> norms;  // ||J(t)|| = sqrt(g_params(v, v)) at each step
};

namespace detail {

/// Generalized gradient pairing 2 Re (M^{j kbar} f_j h_kbar) against an
/// arbitrary Hermitian coefficient field (stored matrix convention, raised
/// entries are the conjugates).
template <typename S>
ScalarField<S> gradient_pairing_with(const MatField<S>& M,
                                     const std::array<CArray<S>, 2>& gf,
                                     const std::array<CArray<S>, 2>& gh) {
  const int n = M.n();
  CArray<S> acc = CArray<S>::Zero(M.grid()->size());
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      acc += M.entry(j, k).conjugate() * gf[j] * gh[k].conjugate();
  return ScalarField<S>(M.grid(), 2 * acc.real());
}

}  // namespace detail

/// Right-hand side of the linearized (Jacobi) system: the Frechet derivative
/// of the combination acceleration at (phi, psi) applied to the variation
/// (v, w), inverted through the same combination operator with the
/// linearized tangency constant.  psi_dot is the acceleration at the base
/// state, taken from the stored trajectory step.
template <typename S>
ScalarField<S> jacobi_rhs(const KahlerPotential<S>& P,
                          const ScalarField<S>& psi,
                          const ScalarField<S>& psi_dot,
                          const ScalarField<S>& v, const ScalarField<S>& w,
                          const MetricParams<S>& params,
                          AccelMode mode = AccelMode::SolvabilityCorrected,
                          const SolveOptions<S>& opts = {}) {
  if (!params.well_posed()) throw IllPosedParams();
  const S a = params.alpha, b = params.beta, c = params.gamma;
  const S sign = (mode == AccelMode::PaperPrinted) ? S(1) : S(-1);
  const MatField<S>& gi = P.inverse_metric();

  const HermitianField<S> H = complex_hessian(psi);
  const HermitianField<S> Hv = complex_hessian(v);
  const HermitianField<S> Hw = complex_hessian(w);
  const MatField<S> giH = gi * H;
  const MatField<S> giHv = gi * Hv;

  const ScalarField<S> lap = giH.real_trace();
  const ScalarField<S> isq = (giH * giH).real_trace();
  const ScalarField<S> pair_vpsi = (giHv * giH).real_trace();
  const ScalarField<S> pair_wpsi = ((gi * Hw) * giH).real_trace();
  const ScalarField<S> triple = ((giHv * giH) * giH).real_trace();

  // d(Delta psi) = Delta w - (i ddbar v, i ddbar psi)
  const ScalarField<S> dlap = (gi * Hw).real_trace() - pair_vpsi;
  // d|i ddbar psi|^2 and d(Delta psi)^2
  const ScalarField<S> disq = 2.0 * pair_wpsi - 2.0 * triple;
  const ScalarField<S> dlap2 = ScalarField<S>(
      P.grid(), 2 * lap.values() * dlap.values());

  const auto gpsi = complex_gradient(psi);
  const auto gw = complex_gradient(w);
  const ScalarField<S> dsq = gradient_pairing(P, gpsi, gpsi);
  // d|d psi|^2 = 2 (dw, dpsi) - sandwich of the metric variation
  const MatField<S> sandwich = giHv * gi;
  const ScalarField<S> ddsq =
      2.0 * gradient_pairing(P, gw, gpsi) -
      detail::gradient_pairing_with(sandwich, gpsi, gpsi);

  ScalarField<S> rhs = (a / 2) * ddsq;
  rhs += (sign * b / 2) * disq;
  rhs += (b / 2) * dlap2;
  if (c != 0) {
    // d(Delta X) = Delta(dX) - (i ddbar v, i ddbar X)
    const ScalarField<S> disq_lap =
        laplacian(P, disq) - hermitian_pairing(P, Hv, complex_hessian(isq));
    const ScalarField<S> lap2 = ScalarField<S>(
        P.grid(), lap.values() * lap.values());
    const ScalarField<S> dlap2_lap =
        laplacian(P, dlap2) - hermitian_pairing(P, Hv, complex_hessian(lap2));
    rhs += (-sign * c) * disq_lap;
    rhs += (sign * c / 2) * dlap2_lap;
  }

  // variation of the operator, moved to the right-hand side:
  // d[-b Delta + c Delta^2](psi_dot) with d(Delta f) = -(i ddbar v, i ddbar f)
  const HermitianField<S> Hpd = complex_hessian(psi_dot);
  const ScalarField<S> pair_vpd = (giHv * (gi * Hpd)).real_trace();
  if (b != 0) rhs += (-b) * pair_vpd;
  if (c != 0) {
    const ScalarField<S> lap_pd = (gi * Hpd).real_trace();
    rhs += c * hermitian_pairing(P, Hv, complex_hessian(lap_pd));
    rhs += c * laplacian(P, pair_vpd);
  }

  // linearized tangency target:
  // d(int psi' dmu) = int w' dmu + int psi' Delta v dmu must equal
  // d(tau) = (1/2) d(int |d psi|^2 dmu)
  const ScalarField<S> lap_v = (giHv).real_trace();
  const S dtau = S(0.5) * (integrate_mu(P, ddsq) +
                           integrate_mu(P, dsq * lap_v));
  const S target = dtau - integrate_mu(P, psi_dot * lap_v);

  SolveResult<S> sol = combination_solve(P, rhs, params,
                                         ConstantPolicy(Tangency{target}), opts);
  return sol.u;
}

/// Integrate the linear Jacobi system along a stored trajectory: the
/// geodesic RK4 stages are reconstructed from the trajectory's initial state
/// and the pair (v, w) is carried with the linearized right-hand side.
/// Initial-value form J(0) = v0, J'(0) ~ w0.
template <typename S>
JacobiSeries<S> integrate_jacobi(const Trajectory<S>& traj,
                                 const ScalarField<S>& v0,
                                 const ScalarField<S>& w0) {
  if (traj.states.empty()) throw Error("empty trajectory");
  const BackgroundPtr<S>& bg = traj.front().P.background();
  const GridPtr& g = traj.front().P.grid();
  const MetricParams<S>& params = traj.params;
  const S dt = traj.dt;

  GeodesicOptions<S> go;
  go.mode = traj.mode;
  go.delta_floor = traj.delta_floor;
  go.solve_opts = traj.solve_opts;

  struct Stage {
    ScalarField<S> dphi, dpsi, dv, dw;
  };
  auto stage = [&](const ScalarField<S>& phi, const ScalarField<S>& psi,
                   const ScalarField<S>& v, const ScalarField<S>& w,
                   S t_for_error) {
    KahlerPotential<S> P;
    try {
      P = build_potential(bg, phi, go.delta_floor);
    } catch (const NotKahler& e) {
      throw PositivityLoss(t_for_error, e.min_eigenvalue);
    }
    Acceleration<S> acc = acceleration(P, psi, params, go.mode, go.solve_opts);
    ScalarField<S> wd =
        jacobi_rhs(P, psi, acc.psi_dot, v, w, params, go.mode, go.solve_opts);
    return Stage{psi, std::move(acc.psi_dot), w, std::move(wd)};
  };

  JacobiSeries<S> out;
  ScalarField<S> phi = traj.front().P.phi();
  ScalarField<S> psi = traj.front().psi;
  ScalarField<S> v = v0, w = w0;

  auto record = [&](S t, const KahlerPotential<S>& P) {
    out.states.push_back({t, v, w});
    out.norms.push_back(std::sqrt(std::max(S(0), inner_product(P, v, v, params))));
  };
  record(0, traj.front().P);

  const std::size_t nsteps = traj.states.size() - 1;
  for (std::size_t k = 0; k < nsteps; ++k) {
    const S t = traj.states[k].t;
    Stage k1 = stage(phi, psi, v, w, t);
    Stage k2 = stage(phi + (dt / 2) * k1.dphi, psi + (dt / 2) * k1.dpsi,
                     v + (dt / 2) * k1.dv, w + (dt / 2) * k1.dw, t + dt / 2);
    Stage k3 = stage(phi + (dt / 2) * k2.dphi, psi + (dt / 2) * k2.dpsi,
                     v + (dt / 2) * k2.dv, w + (dt / 2) * k2.dw, t + dt / 2);
    Stage k4 = stage(phi + dt * k3.dphi, psi + dt * k3.dpsi, v + dt * k3.dv,
                     w + dt * k3.dw, t + dt);
    phi += (dt / 6) * (k1.dphi + S(2) * k2.dphi + S(2) * k3.dphi + k4.dphi);
    psi += (dt / 6) * (k1.dpsi + S(2) * k2.dpsi + S(2) * k3.dpsi + k4.dpsi);
    v += (dt / 6) * (k1.dv + S(2) * k2.dv + S(2) * k3.dv + k4.dv);
    w += (dt / 6) * (k1.dw + S(2) * k2.dw + S(2) * k3.dw + k4.dw);

    // mirror the accepted-state projections of the nonlinear integrator
    KahlerPotential<S> P = build_potential(bg, phi, go.delta_floor);
    const S vol = volume(P);
    const S norm_shift = aubin_functional(P) / vol;
    if (norm_shift != 0) {
      phi -= norm_shift;
      P = build_potential(bg, phi, go.delta_floor);
    }
    psi -= integrate_mu(P, psi) / vol;
    v -= integrate_mu(P, v) / vol;
    const ScalarField<S> lap_v = laplacian(P, v);
    w -= (integrate_mu(P, w) + integrate_mu(P, psi * lap_v)) / vol;
    record(traj.states[k + 1].t, P);
  }
  return out;
}

/// Finite-difference realization of J(t) = d exp_phi|_{t psi0}(t w):
/// (exp(psi0 + eps w, t) - exp(psi0, t)) / eps, one field per stored step.
template <typename S>
std::vector<ScalarField<S>> jacobi_fd_series(const KahlerPotential<S>& P0,
                                             const ScalarField<S>& psi0,
                                             const ScalarField<S>& w,
                                             const MetricParams<S>& params,
                                             S dt, S T, S eps,
                                             const GeodesicOptions<S>& go = {}) {
  Trajectory<S> base = integrate_geodesic(P0, psi0, params, dt, T, go);
  Trajectory<S> pert =
      integrate_geodesic(P0, psi0 + eps * w, params, dt, T, go);
  std::vector<ScalarField<S>> out;
  out.reserve(base.states.size());
  for (std::size_t k = 0; k < base.states.size(); ++k)
    out.push_back((1 / eps) *
                  (pert.states[k].P.phi() - base.states[k].P.phi()));
  return out;
}

template <typename S>
ScalarField<S> jacobi_fd_oracle(const KahlerPotential<S>& P0,
                                const ScalarField<S>& psi0,
                                const ScalarField<S>& w,
                                const MetricParams<S>& params, S t, S eps,
                                S dt, const GeodesicOptions<S>& go = {}) {
  return jacobi_fd_series(P0, psi0, w, params, dt, t, eps, go).back();
}

enum class CurvatureMetric { Mabuchi, Gradient, Calabi };

template <typename S = double>
struct SectionalCurvature {
  S numerator = 0;
  S normalized = 0;
  S gram = 0;           // g(a,a) g(b,b) - g(a,b)^2 in the selected metric
  S dropped_mass = 0;   // largest defect among the a(sigma,tau) solves
};

/// Sectional curvature of the plane spanned by (psi1, psi2):
///  - Mabuchi:  K_M = -int Im(d psi1, dbar psi2)^2 dmu / Gram_M,
///  - Gradient: K_G from the a(sigma, tau) potentials with
///       Delta a = Delta psi_s Delta psi_t - (i ddbar psi_s, i ddbar psi_t),
///  - Calabi:   constant 1/(4 vol_0).
template <typename S>
SectionalCurvature<S> sectional_curvature(const KahlerPotential<S>& P,
                                          const ScalarField<S>& psi1,
                                          const ScalarField<S>& psi2,
                                          CurvatureMetric metric,
                                          const SolveOptions<S>& opts = {}) {
  SectionalCurvature<S> out;
  auto gram_of = [&](auto&& inner) {
    const S g11 = inner(psi1, psi1);
    const S g22 = inner(psi2, psi2);
    const S g12 = inner(psi1, psi2);
    const S gram = g11 * g22 - g12 * g12;
    if (!(gram > 1e-14 * g11 * g22)) throw DegeneratePlane();
    return gram;
  };

  const S vol0 = P.background()->volume_density().mean();
  switch (metric) {
    case CurvatureMetric::Mabuchi: {
      out.gram = gram_of([&](const ScalarField<S>& x, const ScalarField<S>& y) {
        return mabuchi_inner(P, x, y);
      });
      ScalarField<S> im = poisson_bracket_pairing(P, psi1, psi2);
      out.numerator = -integrate_mu(P, im * im);
      out.normalized = out.numerator / out.gram;
      return out;
    }
    case CurvatureMetric::Gradient: {
      out.gram = gram_of([&](const ScalarField<S>& x, const ScalarField<S>& y) {
        return dirichlet_inner(P, x, y);
      });
      auto a_of = [&](const ScalarField<S>& s, const ScalarField<S>& t) {
        ScalarField<S> rhs =
            laplacian(P, s) * laplacian(P, t) - hermitian_pairing(P, s, t);
        SolveResult<S> sol = poisson_solve(P, rhs, ZeroMean{}, opts);
        out.dropped_mass =
            std::max(out.dropped_mass, std::abs(sol.dropped_mass));
        return sol.u;
      };
      ScalarField<S> a12 = a_of(psi1, psi2);
      ScalarField<S> a11 = a_of(psi1, psi1);
      ScalarField<S> a22 = a_of(psi2, psi2);
      out.numerator =
          S(0.5) * integrate_mu(P, gradient_pairing(P, a12, a12)) -
          S(0.5) * integrate_mu(P, gradient_pairing(P, a11, a22));
      out.normalized = out.numerator / out.gram;
      return out;
    }
    case CurvatureMetric::Calabi: {
      out.gram = gram_of([&](const ScalarField<S>& x, const ScalarField<S>& y) {
        return calabi_inner(P, x, y);
      });
      out.normalized = 1 / (4 * vol0);
      out.numerator = out.normalized * out.gram;
      return out;
    }
  }
  throw Error("unreachable");
}

template <typename S = double>
struct RauchRow {
  S t = 0;
  S jacobi_norm = 0;   // ||J_G(t)|| in the gradient metric
  S paper_bound = 0;   // |sin(2 t sqrt(vol))| / sqrt(vol)
  S sphere_norm = 0;   // 2 sqrt(vol) sin(t / (2 sqrt(vol)))
  S kg_min = 0, kg_max = 0;  // K_G(X, gamma'(t)) probed over random X
};

/// Comparison table for the Rauch setup: gradient-metric Jacobi growth
/// against the paper's closed-form bound and the sphere-model Calabi norm,
/// plus a pointwise probe of the curvature hypothesis K_G <= 1/(4 vol_0).
/// Informational; the inequality itself is a hypothesis, not an assertion.
/// A pure Calabi trajectory is accepted too, in which case the Jacobi column
/// reproduces the sphere-model column (a self-check of the table).
template <typename S>
std::vector<RauchRow<S>> rauch_report(const Trajectory<S>& traj,
                                      const ScalarField<S>& w0_raw,
                                      int probes, Rng& rng, int stride = 10) {
  const bool is_gradient = traj.params.alpha == 0 && traj.params.beta > 0 &&
                           traj.params.gamma == 0;
  const bool is_calabi = traj.params.alpha == 0 && traj.params.beta == 0 &&
                         traj.params.gamma > 0;
  if (!is_gradient && !is_calabi)
    throw WrongParams(
        "rauch_report expects a gradient-metric (or Calabi) trajectory");
  const KahlerPotential<S>& P0 = traj.front().P;
  const ScalarField<S>& psi0 = traj.front().psi;

  // J'(0) orthogonal to gamma'(0) and of unit norm in the trajectory metric
  ScalarField<S> w0 = tangent_project(P0, w0_raw);
  const S proj = inner_product(P0, w0, psi0, traj.params) /
                 inner_product(P0, psi0, psi0, traj.params);
  w0 -= proj * psi0;
  w0 *= 1 / std::sqrt(inner_product(P0, w0, w0, traj.params));

  JacobiSeries<S> J = integrate_jacobi(traj, ScalarField<S>(P0.grid()), w0);
  const S vol0 = P0.background()->volume_density().mean();
  const S rv = std::sqrt(vol0);

  std::vector<RauchRow<S>> rows;
  for (std::size_t k = 0; k < traj.states.size(); k += stride) {
    RauchRow<S> row;
    row.t = traj.states[k].t;
    row.jacobi_norm = J.norms[k];
    row.paper_bound = std::abs(std::sin(2 * row.t * rv)) / rv;
    row.sphere_norm = 2 * rv * std::sin(row.t / (2 * rv));
    row.kg_min = std::numeric_limits<S>::max();
    row.kg_max = std::numeric_limits<S>::lowest();
    const KahlerPotential<S>& P = traj.states[k].P;
    for (int i = 0; i < probes; ++i) {
      ScalarField<S> X =
          tangent_project(P, random_band_limited<S>(P.grid(), 3, rng));
      try {
        auto sec = sectional_curvature(P, X, traj.states[k].psi,
                                       CurvatureMetric::Gradient);
        row.kg_min = std::min(row.kg_min, sec.normalized);
        row.kg_max = std::max(row.kg_max, sec.normalized);
      } catch (const DegeneratePlane&) {
        --i;  // resample
      }
    }
    rows.push_back(row);
  }
  return rows;
}

template <typename S = double>
struct ConjugateScan {
  std::vector<S> t;
  std::vector<S> sigma_min;          // smallest singular value of the probe map
  std::vector<S> candidate_times;    // numerical zero crossings, diagnostic only
};

/// Smallest singular value of w -> J(t) restricted to a random
/// probe_count-dimensional tangent subspace, estimated through the
/// finite-difference oracle.  A numerical crossing flags a candidate
/// monoconjugate time; finite probe rank cannot distinguish mono from epi.
template <typename S>
ConjugateScan<S> conjugate_scan(const KahlerPotential<S>& P0,
                                const ScalarField<S>& psi0,
                                const MetricParams<S>& params, S t_max,
                                int probe_count, S dt, S eps, Rng& rng,
                                const GeodesicOptions<S>& go = {},
                                int stride = 10) {
  // probe directions, orthonormalized in the params metric at P0
  std::vector<ScalarField<S>> w(probe_count);
  for (int i = 0; i < probe_count; ++i) {
    ScalarField<S> cand =
        tangent_project(P0, random_band_limited<S>(P0.grid(), 3, rng));
    for (int j = 0; j < i; ++j)
      cand -= inner_product(P0, cand, w[j], params) * w[j];
    const S nrm = std::sqrt(inner_product(P0, cand, cand, params));
    if (nrm < 1e-12) throw DegeneratePlane();
    w[i] = (1 / nrm) * cand;
  }

  Trajectory<S> base = integrate_geodesic(P0, psi0, params, dt, t_max, go);
  std::vector<Trajectory<S>> pert;
  pert.reserve(probe_count);
  for (int i = 0; i < probe_count; ++i)
    pert.push_back(
        integrate_geodesic(P0, psi0 + eps * w[i], params, dt, t_max, go));

  ConjugateScan<S> out;
  for (std::size_t k = 0; k < base.states.size(); k += stride) {
    const KahlerPotential<S>& P = base.states[k].P;
    std::vector<ScalarField<S>> J;
    J.reserve(probe_count);
    for (int i = 0; i < probe_count; ++i)
      J.push_back((1 / eps) *
                  (pert[i].states[k].P.phi() - base.states[k].P.phi()));
    Eigen::MatrixXd G(probe_count, probe_count);
    for (int i = 0; i < probe_count; ++i)
      for (int j = i; j < probe_count; ++j) {
        G(i, j) = inner_product(P, J[i], J[j], params);
        G(j, i) = G(i, j);
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const S lam = std::max(S(0), static_cast<S>(es.eigenvalues()[0]));
    out.t.push_back(base.states[k].t);
    out.sigma_min.push_back(std::sqrt(lam));
  }
  // flag candidate crossings: sigma_min falling to noise level after having
  // grown (sigma_min ~ t near t = 0)
  S smax = 0;
  for (std::size_t k = 0; k < out.sigma_min.size(); ++k) {
    smax = std::max(smax, out.sigma_min[k]);
    if (smax > 0 && out.sigma_min[k] < S(1e-4) * smax)
      out.candidate_times.push_back(out.t[k]);
  }
  return out;
}

}  // namespace kahlerlab

#endif

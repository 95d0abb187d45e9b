#ifndef KAHLERLAB_MONGE_AMPERE_HPP
#define KAHLERLAB_MONGE_AMPERE_HPP

#include "kahlerlab/solvers.hpp"

namespace kahlerlab {

/// phi -> log(omega_phi^n / omega_0'^n), the Calabi-Yau chart of the space
/// of conformal volume forms C = { u : int e^u omega^n/n! = vol }.
template <typename S>
ScalarField<S> ma_forward(const KahlerPotential<S>& P) {
  return ScalarField<S>(P.grid(), P.density().values().log());
}

template <typename S = double>
struct MaInverseResult {
  KahlerPotential<S> P;
  S log_shift = 0;      // constant subtracted from u to restore unit mass
  int newton_iters = 0;
  S residual = 0;       // final max |log rho_phi - u|
};

namespace detail {

/// Solve H(phi)_{0 0bar} = rhs for the n = 1 diagonal Hessian entry by symbol
/// division; modes annihilated by the symbol (mean and Nyquist lines) are
/// dropped.
template <typename S>
ScalarField<S> solve_hessian_diag(const ScalarField<S>& rhs) {
  const Grid& g = *rhs.grid();
  const S pi = std::numbers::pi_v<S>;
  CArray<S> c = spectrum(rhs);
  for_each_index(g, [&](Eigen::Index p, const std::vector<int>& idx) {
    const S a = static_cast<S>(g.wavenumber_odd(idx[0]));
    const S b = static_cast<S>(g.wavenumber_odd(idx[1]));
    const S sym = -pi * pi * (a * a + b * b);
    c[p] = (sym == 0) ? std::complex<S>(0) : c[p] / sym;
  });
  return synthesize(rhs.grid(), std::move(c));
}

}  // namespace detail

/// Calabi-Yau inversion u -> phi with log rho_phi = u, I(phi) = 0.
/// n = 1: a single linear solve (the determinant ratio is affine in the
/// Hessian); n = 2: Newton-Kantorovich with Delta_phi linearization and
/// damped steps preserving positivity.
template <typename S>
MaInverseResult<S> ma_inverse(const BackgroundPtr<S>& bg, ScalarField<S> u,
                              S delta_floor = S(1e-6), S tol = S(1e-9),
                              const SolveOptions<S>& opts = {}) {
  MaInverseResult<S> out;
  const S vol0 = bg->volume_density().mean();
  const S mass = integrate(ScalarField<S>(u.grid(), u.values().exp()),
                           bg->volume_density());
  if (std::abs(mass - vol0) > S(1e-8) * vol0) {
    out.log_shift = std::log(mass / vol0);
    u -= out.log_shift;
  }

  const int n = bg->grid()->n_complex();
  ScalarField<S> rho_target(u.grid(), u.values().exp());
  ScalarField<S> phi(u.grid());
  if (n == 1) {
    ScalarField<S> rhs(u.grid(), (rho_target.values() - 1) *
                                     bg->metric().entry(0, 0).real());
    phi = detail::solve_hessian_diag(rhs);
  } else {
    // linearized start: Delta_0' phi ~ rho - 1
    phi = flat_inverse_laplacian(
        ScalarField<S>(u.grid(), rho_target.values() - 1));
  }

  KahlerPotential<S> P = build_potential(bg, phi, delta_floor);
  auto residual = [&](const KahlerPotential<S>& Q) {
    return (Q.density().values().log() - u.values()).abs().maxCoeff();
  };
  S res = residual(P);
  const int max_newton = 40;
  while (res > tol && out.newton_iters < max_newton) {
    ScalarField<S> r(u.grid(), P.density().values().log() - u.values());
    SolveResult<S> step = poisson_solve(P, -r, ZeroMean{}, opts);
    S s = 1;
    bool accepted = false;
    for (int h = 0; h < 12; ++h, s /= 2) {
      try {
        KahlerPotential<S> Q =
            build_potential(bg, P.phi() + s * step.u, delta_floor);
        const S rq = residual(Q);
        if (rq < res * (1 - S(0.1) * s) || rq < tol) {
          P = Q;
          res = rq;
          accepted = true;
          break;
        }
      } catch (const NotKahler&) {
        // halve the step and retry
      }
    }
    ++out.newton_iters;
    if (!accepted) break;
  }
  if (res > tol)
    throw NoConvergence("ma_inverse", res, out.newton_iters);
  out.P = normalize_potential(P, delta_floor);
  out.residual = residual(out.P);
  return out;
}

}  // namespace kahlerlab

#endif

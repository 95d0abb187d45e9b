#ifndef KAHLERLAB_CALABI_HPP
#define KAHLERLAB_CALABI_HPP

#include "kahlerlab/spectral.hpp"

namespace kahlerlab {

/// Sphere model of the Calabi metric on the space of conformal volume forms
/// C = { u : int e^u dV = vol_0 }: F = 2 e^{u/2} lies on the L^2 sphere of
/// radius 2 sqrt(vol_0), the metric pulls back to the flat one, and geodesics
/// are great circles.  Reconstructed oracle for the constant-curvature
/// K = 1/(4 vol_0) statement; flat background, vol_0 = 1.
template <typename S = double>
struct CalabiExactState {
  ScalarField<S> u;
  ScalarField<S> udot;
};

template <typename S>
CalabiExactState<S> calabi_exact_geodesic(const ScalarField<S>& u0,
                                          const ScalarField<S>& v0, S t) {
  const auto& g = u0.grid();
  const S vol0 = 1;
  const S mass = u0.values().exp().mean();
  if (std::abs(mass - vol0) > S(1e-6))
    throw IncompatibleSource("u0 is not in C: int e^u = " + std::to_string(mass));
  typename ScalarField<S>::Array half = (u0.values() / 2).exp();
  typename ScalarField<S>::Array F0 = 2 * half;
  typename ScalarField<S>::Array W = v0.values() * half;
  const S tang = (v0.values() * u0.values().exp()).mean();
  if (std::abs(tang) > S(1e-8) * (1 + W.abs().maxCoeff()))
    throw IncompatibleSource("v0 is not tangent to C at u0");

  const S wnorm = std::sqrt(W.square().mean());
  if (wnorm == 0) return {u0, ScalarField<S>(g)};
  const S c = wnorm / (2 * std::sqrt(vol0));
  typename ScalarField<S>::Array F =
      std::cos(c * t) * F0 + (std::sin(c * t) / c) * W;
  if (F.minCoeff() <= 0) throw LeftPositiveCone();
  typename ScalarField<S>::Array Fdot =
      -c * std::sin(c * t) * F0 + std::cos(c * t) * W;
  CalabiExactState<S> out;
  out.u = ScalarField<S>(g, 2 * (F / 2).log());
  out.udot = ScalarField<S>(g, 2 * Fdot / F);
  return out;
}

/// Chord-angle distance on the sphere model,
/// d(u0, u1) = 2 sqrt(vol_0) arccos(<F0, F1> / (4 vol_0)),
/// evaluated through the chord length for stability at small separations.
template <typename S>
S calabi_distance(const ScalarField<S>& u0, const ScalarField<S>& u1) {
  const S vol0 = 1;
  const S radius = 2 * std::sqrt(vol0);
  typename ScalarField<S>::Array F0 = 2 * (u0.values() / 2).exp();
  typename ScalarField<S>::Array F1 = 2 * (u1.values() / 2).exp();
  const S chord = std::sqrt((F0 - F1).square().mean());
  const S half = std::min(S(1), chord / (2 * radius));
  return 2 * radius * std::asin(half);
}

}  // namespace kahlerlab

#endif

#ifndef KAHLERLAB_OPERATORS_HPP
#define KAHLERLAB_OPERATORS_HPP

#include <array>

#include "kahlerlab/potential.hpp"

namespace kahlerlab {

/// Holomorphic gradient f_j = df/dz_j = 1/2 (d_{x_j} f - i d_{y_j} f),
/// one complex array per complex coordinate.
template <typename S>
std::array<CArray<S>, 2> complex_gradient(const ScalarField<S>& f) {
  const Grid& g = *f.grid();
  const int n = g.n_complex();
  const S pi = std::numbers::pi_v<S>;
  CArray<S> c = spectrum(f);
  std::array<CArray<S>, 2> out;
  for (int j = 0; j < n; ++j) {
    CArray<S> e(g.size());
    detail::for_each_index(g, [&](Eigen::Index p, const std::vector<int>& idx) {
      const S aj = static_cast<S>(g.wavenumber_odd(idx[j]));
      const S bj = static_cast<S>(g.wavenumber_odd(idx[n + j]));
      e[p] = c[p] * std::complex<S>(pi * bj, pi * aj);
    });
    out[j] = synthesize_complex(f.grid(), std::move(e));
  }
  return out;
}

/// dbar-Laplacian Delta_phi f = g_phi^{j kbar} f_{j kbar}.
template <typename S>
ScalarField<S> laplacian(const KahlerPotential<S>& P, const ScalarField<S>& f) {
  return (P.inverse_metric() * complex_hessian(f)).real_trace();
}

template <typename S>
ScalarField<S> laplacian(const KahlerPotential<S>& P,
                         const HermitianField<S>& hess_f) {
  return (P.inverse_metric() * hess_f).real_trace();
}

/// Pointwise pairing of (1,1)-forms,
/// (i ddbar f, i ddbar h)_phi = g^{j lbar} g^{m kbar} f_{j kbar} h_{m lbar}
/// = Re tr(g^{-1} H_f g^{-1} H_h); with f = h this is |i ddbar f|^2_phi.
template <typename S>
ScalarField<S> hermitian_pairing(const KahlerPotential<S>& P,
                                 const HermitianField<S>& Hf,
                                 const HermitianField<S>& Hh) {
  const MatField<S>& gi = P.inverse_metric();
  return ((gi * Hf) * (gi * Hh)).real_trace();
}

template <typename S>
ScalarField<S> hermitian_pairing(const KahlerPotential<S>& P,
                                 const ScalarField<S>& f,
                                 const ScalarField<S>& h) {
  return hermitian_pairing(P, complex_hessian(f), complex_hessian(h));
}

/// Hermitian gradient product (df, dh)_phi = 2 Re (g^{j kbar} f_j h_kbar).
/// The convention ledger fixes |df|^2 = 2 |partial f|^2.
template <typename S>
ScalarField<S> gradient_pairing(const KahlerPotential<S>& P,
                                const std::array<CArray<S>, 2>& gf,
                                const std::array<CArray<S>, 2>& gh) {
  const int n = P.grid()->n_complex();
  const MatField<S>& gi = P.inverse_metric();
  CArray<S> acc = CArray<S>::Zero(P.grid()->size());
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      acc += gi.entry(j, k).conjugate() * gf[j] * gh[k].conjugate();
  return ScalarField<S>(P.grid(), 2 * acc.real());
}

template <typename S>
ScalarField<S> gradient_pairing(const KahlerPotential<S>& P,
                                const ScalarField<S>& f,
                                const ScalarField<S>& h) {
  return gradient_pairing(P, complex_gradient(f), complex_gradient(h));
}

/// All 2n real-axis first derivatives from a single forward transform.
template <typename S>
std::vector<typename ScalarField<S>::Array> gradient_all(
    const ScalarField<S>& f) {
  const Grid& g = *f.grid();
  const S two_pi = 2 * std::numbers::pi_v<S>;
  CArray<S> c = spectrum(f);
  std::vector<typename ScalarField<S>::Array> out(g.dim());
  for (int a = 0; a < g.dim(); ++a) {
    CArray<S> e(g.size());
    detail::for_each_index(g, [&](Eigen::Index p, const std::vector<int>& idx) {
      e[p] = c[p] * std::complex<S>(0, two_pi * g.wavenumber_odd(idx[a]));
    });
    out[a] = synthesize_complex(f.grid(), std::move(e)).real();
  }
  return out;
}

/// sum_a d_a(flux_a), accumulated in frequency space.
template <typename S>
typename ScalarField<S>::Array divergence_all(
    const GridPtr& gp, const std::vector<typename ScalarField<S>::Array>& flux) {
  const Grid& g = *gp;
  const S two_pi = 2 * std::numbers::pi_v<S>;
  CArray<S> acc = CArray<S>::Zero(g.size());
  for (int a = 0; a < g.dim(); ++a) {
    CArray<S> c = spectrum(ScalarField<S>(gp, flux[a]));
    detail::for_each_index(g, [&](Eigen::Index p, const std::vector<int>& idx) {
      acc[p] += c[p] * std::complex<S>(0, two_pi * g.wavenumber_odd(idx[a]));
    });
  }
  return synthesize(gp, std::move(acc)).values();
}

/// Divergence-form assembly of the weighted dbar-Laplacian,
///   L u = div( w C grad u ) = w Delta_phi u  (continuum),
/// with C = (1/4) realify(g_phi^{-1}) on axes (x_1..x_n, y_1..y_n).  Spectral
/// first derivatives are exactly antisymmetric on the grid, so L is exactly
/// self-adjoint and negative semidefinite with constants as kernel; it
/// differs from the pointwise contraction by spectral aliasing only.
template <typename S = double>
class WeightedLaplacian {
 public:
  using Array = typename ScalarField<S>::Array;

  explicit WeightedLaplacian(const KahlerPotential<S>& P)
      : grid_(P.grid()), d_(P.grid()->dim()) {
    const int n = P.grid()->n_complex();
    const Array& w = P.measure_weight().values();
    // raised metric g^{j kbar} = conj of the stored matrix inverse
    auto a = [&](int j, int k) {
      return (P.inverse_metric().entry(j, k).real() * w / 4).eval();
    };
    auto b = [&](int j, int k) {
      return (-P.inverse_metric().entry(j, k).imag() * w / 4).eval();
    };
    C_.resize(d_ * d_);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        C_[j * d_ + k] = a(j, k);
        C_[j * d_ + (n + k)] = -b(j, k);
        C_[(n + j) * d_ + k] = b(j, k);
        C_[(n + j) * d_ + (n + k)] = a(j, k);
      }
  }

  /// L u; exactly symmetric in the plain discrete inner product.
  Array apply(const Array& u) const {
    auto du = gradient_all(ScalarField<S>(grid_, u));
    std::vector<Array> flux(d_);
    for (int r = 0; r < d_; ++r) {
      flux[r] = C_[r * d_] * du[0];
      for (int c = 1; c < d_; ++c) flux[r] += C_[r * d_ + c] * du[c];
    }
    return divergence_all<S>(grid_, flux);
  }

 private:
  GridPtr grid_;
  int d_;
  std::vector<Array> C_;
};

/// Im (partial f, dbar h)_phi, the antisymmetric part entering K_M.
template <typename S>
ScalarField<S> poisson_bracket_pairing(const KahlerPotential<S>& P,
                                       const ScalarField<S>& f,
                                       const ScalarField<S>& h) {
  const auto gf = complex_gradient(f);
  const auto gh = complex_gradient(h);
  const int n = P.grid()->n_complex();
  const MatField<S>& gi = P.inverse_metric();
  CArray<S> acc = CArray<S>::Zero(P.grid()->size());
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      acc += gi.entry(j, k).conjugate() * gf[j] * gh[k].conjugate();
  return ScalarField<S>(P.grid(), acc.imag());
}

/// Max over points of the spectral radius of i ddbar psi measured against
/// g_phi (the obstruction quantity -C omega_phi <= i ddbar psi <= C omega_phi).
template <typename S>
S hessian_bound(const KahlerPotential<S>& P, const ScalarField<S>& psi) {
  HermitianField<S> H = complex_hessian(psi);
  auto [lo, hi] = relative_eigen_range(H, P.metric());
  return std::max(std::abs(lo), std::abs(hi));
}

namespace detail {

/// Density of omega_A wedge omega_B / 2 against dV for n = 2 Hermitian A, B.
template <typename S>
typename ScalarField<S>::Array wedge_pair_density(const MatField<S>& A,
                                                  const MatField<S>& B) {
  auto mixed = (A.entry(0, 0) * B.entry(1, 1) + A.entry(1, 1) * B.entry(0, 0) -
                A.entry(0, 1) * B.entry(1, 0) - A.entry(1, 0) * B.entry(0, 1))
                   .real();
  return 2 * mixed;
}

}  // namespace detail

/// Normalization functional I(phi) with dI[psi] = integral of psi against
/// omega_phi^n/n! and I(0) = 0, evaluated through the primitive
///   I(phi) = 1/(n+1) sum_{j=0}^{n} int phi omega^{n-j} wedge omega_phi^j / n!,
/// whose wedge densities are expanded pointwise for n <= 2.
template <typename S>
S aubin_functional(const KahlerPotential<S>& P) {
  const int n = P.grid()->n_complex();
  if (n > 2) throw Unsupported("aubin_functional supports n <= 2");
  const auto& phi = P.phi().values();
  const MatField<S>& g0 = P.background()->metric();
  const MatField<S>& gp = P.metric();
  if (n == 1) {
    auto d0 = 2 * g0.entry(0, 0).real();
    auto d1 = 2 * gp.entry(0, 0).real();
    return S(0.5) * (phi * (d0 + d1)).mean();
  }
  auto w0 = (S(4) * g0.det().real()).eval();
  auto w1 = detail::wedge_pair_density(g0, gp);
  auto w2 = (S(4) * gp.det().real()).eval();
  return ((phi * (w0 + w1 + w2)).mean()) / S(3);
}

/// Shift phi by the constant that zeroes I; affine in the shift, so a single
/// Newton step dI/dc = -vol_0 lands within quadrature noise.
template <typename S>
KahlerPotential<S> normalize_potential(const KahlerPotential<S>& P,
                                       S delta_floor = S(1e-6)) {
  const S vol0 = P.background()->volume_density().mean();
  KahlerPotential<S> Q = P;
  for (int pass = 0; pass < 3; ++pass) {
    const S I = aubin_functional(Q);
    if (std::abs(I) <= S(1e-13)) break;
    Q = build_potential(Q.background(), Q.phi() - I / vol0, delta_floor);
  }
  return Q;
}

/// Combination inner product
///   g = alpha int psi1 psi2 dmu + beta int (d psi1, d psi2)_phi dmu
///       + gamma int Delta psi1 Delta psi2 dmu.
template <typename S>
S inner_product(const KahlerPotential<S>& P, const ScalarField<S>& psi1,
                const ScalarField<S>& psi2, const MetricParams<S>& params) {
  S g = 0;
  if (params.alpha != 0) g += params.alpha * integrate_mu(P, psi1 * psi2);
  if (params.beta != 0)
    g += params.beta * integrate_mu(P, gradient_pairing(P, psi1, psi2));
  if (params.gamma != 0)
    g += params.gamma * integrate_mu(P, laplacian(P, psi1) * laplacian(P, psi2));
  return g;
}

template <typename S>
S inner_product(const KahlerPotential<S>& P, const TangentVector<S>& t1,
                const TangentVector<S>& t2, const MetricParams<S>& params) {
  if (t1.base_id != P.id() || t2.base_id != P.id())
    throw WrongParams("tangent vectors are not based at this potential");
  return inner_product(P, t1.psi, t2.psi, params);
}

template <typename S>
S mabuchi_inner(const KahlerPotential<S>& P, const ScalarField<S>& a,
                const ScalarField<S>& b) {
  return integrate_mu(P, a * b);
}

template <typename S>
S dirichlet_inner(const KahlerPotential<S>& P, const ScalarField<S>& a,
                  const ScalarField<S>& b) {
  return integrate_mu(P, gradient_pairing(P, a, b));
}

template <typename S>
S calabi_inner(const KahlerPotential<S>& P, const ScalarField<S>& a,
               const ScalarField<S>& b) {
  return integrate_mu(P, laplacian(P, a) * laplacian(P, b));
}

/// Speed squared conserved along combination geodesics.  The geodesic
/// equations weight the gradient term by |partial psi|^2 = (1/2) |d psi|^2,
/// so this equals inner_product at (alpha, beta/2, gamma); the factor is
/// recorded in the run manifest.
template <typename S>
S geodesic_speed_sq(const KahlerPotential<S>& P, const ScalarField<S>& psi,
                    const MetricParams<S>& params) {
  S g = params.alpha * integrate_mu(P, psi * psi);
  if (params.beta != 0)
    g += params.beta / 2 * integrate_mu(P, gradient_pairing(P, psi, psi));
  if (params.gamma != 0) {
    ScalarField<S> lp = laplacian(P, psi);
    g += params.gamma * integrate_mu(P, lp * lp);
  }
  return g;
}

}  // namespace kahlerlab

#endif

#ifndef KAHLERLAB_SPECTRAL_HPP
#define KAHLERLAB_SPECTRAL_HPP

#include <unsupported/Eigen/FFT>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "kahlerlab/field.hpp"
#include "kahlerlab/grid.hpp"

namespace kahlerlab {

template <typename S>
using CArray = Eigen::Array<std::complex<S>, Eigen::Dynamic, 1>;

namespace detail {

/// In-place 1D transforms along one axis of a row-major d-dim array.
/// forward: unscaled sum with e^{-2 pi i}; inverse: e^{+2 pi i} scaled 1/N.
template <typename S>
void fft_axis(const Grid& g, CArray<S>& data, int axis, bool forward) {
  const int N = g.points_per_axis();
  Eigen::Index stride = 1;
  for (int a = g.dim() - 1; a > axis; --a) stride *= N;
  const Eigen::Index block = stride * N;
  const Eigen::Index nblocks = g.size() / block;
  thread_local Eigen::FFT<S> fft;
  Eigen::Matrix<std::complex<S>, Eigen::Dynamic, 1> in(N), out(N);
  for (Eigen::Index b = 0; b < nblocks; ++b)
    for (Eigen::Index s = 0; s < stride; ++s) {
      const Eigen::Index base = b * block + s;
      for (int i = 0; i < N; ++i) in[i] = data[base + i * stride];
      if (forward)
        fft.fwd(out, in);
      else
        fft.inv(out, in);
      for (int i = 0; i < N; ++i) data[base + i * stride] = out[i];
    }
}

/// Visit every flat index together with its per-axis index vector.
template <typename F>
void for_each_index(const Grid& g, F&& fn) {
  const int d = g.dim();
  const int N = g.points_per_axis();
  std::vector<int> idx(d, 0);
  for (Eigen::Index p = 0; p < g.size(); ++p) {
    fn(p, idx);
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[a] < N) break;
      idx[a] = 0;
    }
  }
}

}  // namespace detail

/// Normalized Fourier coefficients: f(x) = sum_k c_k exp(2 pi i k.x).
template <typename S>
CArray<S> spectrum(const ScalarField<S>& f) {
  const Grid& g = *f.grid();
  CArray<S> data = f.values().template cast<std::complex<S>>();
  for (int a = 0; a < g.dim(); ++a) detail::fft_axis<S>(g, data, a, true);
  data /= static_cast<S>(g.size());
  return data;
}

template <typename S>
CArray<S> spectrum_complex(const GridPtr& g, CArray<S> data) {
  for (int a = 0; a < g->dim(); ++a) detail::fft_axis<S>(*g, data, a, true);
  data /= static_cast<S>(g->size());
  return data;
}

/// Inverse of spectrum(); imaginary part is discarded.
template <typename S>
ScalarField<S> synthesize(const GridPtr& g, CArray<S> coeffs) {
  for (int a = 0; a < g->dim(); ++a) detail::fft_axis<S>(*g, coeffs, a, false);
  coeffs *= static_cast<S>(g->size());
  return ScalarField<S>(g, coeffs.real());
}

template <typename S>
CArray<S> synthesize_complex(const GridPtr& g, CArray<S> coeffs) {
  for (int a = 0; a < g->dim(); ++a) detail::fft_axis<S>(*g, coeffs, a, false);
  coeffs *= static_cast<S>(g->size());
  return coeffs;
}

/// Spectrally exact partial derivative of the trigonometric interpolant
/// along a real axis.  First-order symbols suppress the unpaired Nyquist
/// mode so real fields stay real; second-order symbols keep it.
template <typename S>
ScalarField<S> partial_derivative(const ScalarField<S>& f, int axis,
                                  int order = 1) {
  const Grid& g = *f.grid();
  if (axis < 0 || axis >= g.dim()) throw Error("axis out of range");
  if (order != 1 && order != 2) throw Error("order must be 1 or 2");
  CArray<S> c = spectrum(f);
  const S two_pi = 2 * std::numbers::pi_v<S>;
  detail::for_each_index(g, [&](Eigen::Index p, const std::vector<int>& idx) {
    if (order == 1) {
      const S k = static_cast<S>(g.wavenumber_odd(idx[axis]));
      c[p] *= std::complex<S>(0, two_pi * k);
    } else {
      const S k = static_cast<S>(g.wavenumber(idx[axis]));
      c[p] *= -two_pi * two_pi * k * k;
    }
  });
  return synthesize(f.grid(), std::move(c));
}

/// Complex Hessian f_{j kbar} = d^2 f / dz_j dzbar_k of a real field, with
/// z_j = x_j + i y_j:
///   f_{j kbar} = 1/4 [ (d_{x_j x_k} + d_{y_j y_k}) f
///                      + i (d_{x_j y_k} - d_{y_j x_k}) f ].
/// Hermitian pointwise by construction.
template <typename S>
HermitianField<S> complex_hessian(const ScalarField<S>& f) {
  const GridPtr& gp = f.grid();
  const Grid& g = *gp;
  const int n = g.n_complex();
  const S pi = std::numbers::pi_v<S>;
  CArray<S> c = spectrum(f);
  HermitianField<S> H(gp, n);
  // dz_j symbol p_j = pi (b_j + i a_j), dzbar_k symbol q_k = pi (-b_k + i a_k)
  // for the mode exp(2 pi i (a.x + b.y)).
  for (int j = 0; j < n; ++j)
    for (int k = j; k < n; ++k) {
      CArray<S> e(g.size());
      detail::for_each_index(g, [&](Eigen::Index p, const std::vector<int>& idx) {
        const S aj = static_cast<S>(g.wavenumber_odd(idx[j]));
        const S bj = static_cast<S>(g.wavenumber_odd(idx[n + j]));
        const S ak = static_cast<S>(g.wavenumber_odd(idx[k]));
        const S bk = static_cast<S>(g.wavenumber_odd(idx[n + k]));
        const std::complex<S> pj(pi * bj, pi * aj);
        const std::complex<S> qk(-pi * bk, pi * ak);
        e[p] = c[p] * pj * qk;
      });
      e = synthesize_complex(gp, std::move(e));
      H.entry(j, k) = e;
      if (k != j) H.entry(k, j) = e.conjugate();
    }
  return H;
}

/// Quadrature against the flat background volume (vol_0 = 1 on the unit
/// torus): the grid mean, spectrally accurate for smooth integrands.
template <typename S>
S integrate(const ScalarField<S>& f) {
  return f.mean();
}

template <typename S>
S integrate(const ScalarField<S>& f, const ScalarField<S>& w) {
  return (f.values() * w.values()).mean();
}

/// Background dbar-Laplacian Delta_0 = (1/2) * (real Laplacian) applied via
/// its exact Fourier symbol -2 pi^2 |k|^2.
template <typename S>
ScalarField<S> flat_laplacian(const ScalarField<S>& f) {
  const Grid& g = *f.grid();
  CArray<S> c = spectrum(f);
  const S pi = std::numbers::pi_v<S>;
  detail::for_each_index(g, [&](Eigen::Index p, const std::vector<int>& idx) {
    S k2 = 0;
    for (int a = 0; a < g.dim(); ++a) {
      const S k = static_cast<S>(g.wavenumber(idx[a]));
      k2 += k * k;
    }
    c[p] *= -2 * pi * pi * k2;
  });
  return synthesize(f.grid(), std::move(c));
}

/// Solve Delta_0 u = f - mean(f) with mean(u) = 0 (division by symbol).
template <typename S>
ScalarField<S> flat_inverse_laplacian(const ScalarField<S>& f) {
  const Grid& g = *f.grid();
  CArray<S> c = spectrum(f);
  const S pi = std::numbers::pi_v<S>;
  detail::for_each_index(g, [&](Eigen::Index p, const std::vector<int>& idx) {
    S k2 = 0;
    for (int a = 0; a < g.dim(); ++a) {
      const S k = static_cast<S>(g.wavenumber(idx[a]));
      k2 += k * k;
    }
    c[p] = (k2 == 0) ? std::complex<S>(0) : c[p] / (-2 * pi * pi * k2);
  });
  return synthesize(f.grid(), std::move(c));
}

/// Flat-symbol inverse of [alpha - beta Delta_0 + gamma Delta_0^2]; the zero
/// mode is dropped when alpha = 0.  Used as the combination preconditioner.
template <typename S>
ScalarField<S> flat_combination_inverse(const ScalarField<S>& f, S alpha,
                                        S beta, S gamma) {
  const Grid& g = *f.grid();
  CArray<S> c = spectrum(f);
  const S pi = std::numbers::pi_v<S>;
  detail::for_each_index(g, [&](Eigen::Index p, const std::vector<int>& idx) {
    S k2 = 0;
    for (int a = 0; a < g.dim(); ++a) {
      const S k = static_cast<S>(g.wavenumber(idx[a]));
      k2 += k * k;
    }
    const S lam = 2 * pi * pi * k2;  // symbol of -Delta_0
    const S sym = alpha + beta * lam + gamma * lam * lam;
    c[p] = (sym == 0) ? std::complex<S>(0) : c[p] / sym;
  });
  return synthesize(f.grid(), std::move(c));
}

/// Flat-symbol inverse of (Delta_0 - 1); no kernel.
template <typename S>
ScalarField<S> flat_helmholtz_inverse(const ScalarField<S>& f) {
  const Grid& g = *f.grid();
  CArray<S> c = spectrum(f);
  const S pi = std::numbers::pi_v<S>;
  detail::for_each_index(g, [&](Eigen::Index p, const std::vector<int>& idx) {
    S k2 = 0;
    for (int a = 0; a < g.dim(); ++a) {
      const S k = static_cast<S>(g.wavenumber(idx[a]));
      k2 += k * k;
    }
    c[p] /= (-2 * pi * pi * k2 - 1);
  });
  return synthesize(f.grid(), std::move(c));
}

/// Zero the modes annihilated by odd-symmetrized derivative symbols (every
/// axis index 0 or N/2, the mean included).  These lie outside the range of
/// the divergence-form operators and carry only aliasing-level content for
/// smooth fields.
template <typename S>
ScalarField<S> drop_derivative_null_modes(const ScalarField<S>& f) {
  const Grid& g = *f.grid();
  const int half = g.points_per_axis() / 2;
  CArray<S> c = spectrum(f);
  detail::for_each_index(g, [&](Eigen::Index p, const std::vector<int>& idx) {
    for (int a = 0; a < g.dim(); ++a)
      if (idx[a] != 0 && idx[a] != half) return;
    c[p] = 0;
  });
  return synthesize(f.grid(), std::move(c));
}

/// 2/3-rule truncation: zero every mode with some |k_a| > N/3.
template <typename S>
ScalarField<S> dealias23(const ScalarField<S>& f) {
  const Grid& g = *f.grid();
  const int cut = g.points_per_axis() / 3;
  CArray<S> c = spectrum(f);
  detail::for_each_index(g, [&](Eigen::Index p, const std::vector<int>& idx) {
    for (int a = 0; a < g.dim(); ++a)
      if (std::abs(g.wavenumber(idx[a])) > cut) {
        c[p] = 0;
        return;
      }
  });
  return synthesize(f.grid(), std::move(c));
}

/// Product honoring the grid's dealiasing knob.
template <typename S>
ScalarField<S> multiply(const ScalarField<S>& a, const ScalarField<S>& b) {
  ScalarField<S> r(a.grid(), a.values() * b.values());
  if (a.grid()->dealias_products()) r = dealias23(r);
  return r;
}

/// Wavenumber-space power sum_k |c_k|^2; equals integrate(f*f) by Parseval.
template <typename S>
S spectral_power(const ScalarField<S>& f) {
  return spectrum(f).abs2().sum();
}

/// Fraction of spectral power carried by modes with some |k_a| > N/3;
/// a smoothness proxy for shock monitoring.
template <typename S>
S spectral_tail_fraction(const ScalarField<S>& f) {
  const Grid& g = *f.grid();
  const int cut = g.points_per_axis() / 3;
  CArray<S> c = spectrum(f);
  S tail = 0, tot = 0;
  detail::for_each_index(g, [&](Eigen::Index p, const std::vector<int>& idx) {
    const S p2 = std::norm(c[p]);
    tot += p2;
    for (int a = 0; a < g.dim(); ++a)
      if (std::abs(g.wavenumber(idx[a])) > cut) {
        tail += p2;
        return;
      }
  });
  return tot > 0 ? tail / tot : S(0);
}

}  // namespace kahlerlab

#endif

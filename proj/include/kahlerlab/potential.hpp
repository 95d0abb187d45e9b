#ifndef KAHLERLAB_POTENTIAL_HPP
#define KAHLERLAB_POTENTIAL_HPP

#include <cstring>
#include <memory>
#include <utility>

#include "kahlerlab/spectral.hpp"

namespace kahlerlab {

/// Background Kahler structure omega_0' = omega_0 + i ddbar psi_0 on the unit
/// torus, with the convention g0_{j kbar} = 1/2 delta_jk for psi_0 = 0, so
/// vol_0 = 1 and Delta_0 = (1/2) * (real Laplacian).
template <typename S = double>
class Background {
 public:
  static std::shared_ptr<const Background> flat(GridPtr grid) {
    return std::shared_ptr<const Background>(
        new Background(std::move(grid), ScalarField<S>()));
  }

  /// omega_0' = omega_0 + i ddbar psi_0; psi_0 must keep the form positive.
  static std::shared_ptr<const Background> curved(const ScalarField<S>& psi0) {
    return std::shared_ptr<const Background>(
        new Background(psi0.grid(), psi0));
  }

  const GridPtr& grid() const { return grid_; }
  bool is_flat() const { return flat_; }
  const HermitianField<S>& metric() const { return g0_; }
  const HermitianField<S>& inverse_metric() const { return g0_inv_; }
  /// det(2 g0'): density of omega_0'^n / n! against Lebesgue dV; 1 when flat.
  const ScalarField<S>& volume_density() const { return vol_density_; }
  /// Ricci form R_{j kbar}(omega_0') = -(log det g0')_{j kbar}.
  const HermitianField<S>& ricci() const { return ricci_; }

 private:
  Background(GridPtr grid, const ScalarField<S>& psi0)
      : grid_(std::move(grid)), flat_(psi0.values().size() == 0) {
    const int n = grid_->n_complex();
    g0_ = HermitianField<S>(grid_, n);
    for (int j = 0; j < n; ++j)
      g0_.entry(j, j).setConstant(std::complex<S>(S(0.5), 0));
    if (!flat_) {
      HermitianField<S> H = complex_hessian(psi0);
      g0_ = g0_ + H;
    }
    auto [lo, hi] = relative_eigen_range(
        g0_, unit_background(grid_, n).scaled(S(0.5)));
    if (lo <= 0) throw NotKahler(lo);
    g0_inv_ = g0_.inverse();
    const typename ScalarField<S>::Array det0 = g0_.det().real();
    vol_density_ = ScalarField<S>(
        grid_, det0 * std::pow(S(2), static_cast<S>(n)));
    if (flat_) {
      ricci_ = HermitianField<S>(grid_, n);  // zero
    } else {
      ScalarField<S> logdet(grid_, det0.log());
      HermitianField<S> Hld = complex_hessian(logdet);
      ricci_ = Hld.scaled(S(-1));
    }
  }

  static MatField<S> unit_background(const GridPtr& g, int n) {
    MatField<S> m(g, n);
    for (int j = 0; j < n; ++j) m.entry(j, j).setConstant(std::complex<S>(1, 0));
    return m;
  }

  GridPtr grid_;
  bool flat_;
  HermitianField<S> g0_, g0_inv_, ricci_;
  ScalarField<S> vol_density_;
};

template <typename S = double>
using BackgroundPtr = std::shared_ptr<const Background<S>>;

/// Combination-metric parameters (alpha, beta, gamma), all nonnegative and
/// not all zero.  The Cauchy problem requires beta > 0 or gamma > 0.
template <typename S = double>
struct MetricParams {
  S alpha = 0, beta = 0, gamma = 0;

  MetricParams() = default;
  MetricParams(S a, S b, S c) : alpha(a), beta(b), gamma(c) {
    if (a < 0 || b < 0 || c < 0 || (a == 0 && b == 0 && c == 0))
      throw Error("metric parameters must be nonnegative, not all zero");
  }

  bool well_posed() const { return beta > 0 || gamma > 0; }

  static MetricParams mabuchi() { return {1, 0, 0}; }
  static MetricParams dirichlet() { return {0, 1, 0}; }
  static MetricParams calabi() { return {0, 0, 1}; }
  static MetricParams sum() { return {0, 1, 1}; }
};

namespace detail {
inline std::uint64_t fnv1a(const void* data, std::size_t bytes,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}
}  // namespace detail

template <typename S = double>
class KahlerPotential;

template <typename S>
KahlerPotential<S> build_potential(const BackgroundPtr<S>& bg,
                                   const ScalarField<S>& phi,
                                   S delta_floor = S(1e-6));

/// Kahler potential phi with cached metric g_phi = g0' + i ddbar phi, its
/// inverse, volume density rho = det(g_phi)/det(g0') and positivity margin.
template <typename S>
class KahlerPotential {
 public:
  KahlerPotential() = default;

  const BackgroundPtr<S>& background() const { return bg_; }
  const GridPtr& grid() const { return phi_.grid(); }
  const ScalarField<S>& phi() const { return phi_; }
  const HermitianField<S>& phi_hessian() const { return hess_; }
  const HermitianField<S>& metric() const { return metric_; }
  const HermitianField<S>& inverse_metric() const { return inverse_metric_; }
  /// rho = omega_phi^n / omega_0'^n.
  const ScalarField<S>& density() const { return density_; }
  /// rho * det(2 g0'): density of omega_phi^n/n! against Lebesgue dV.
  const ScalarField<S>& measure_weight() const { return weight_; }
  S min_eigenvalue() const { return min_eig_; }
  std::uint64_t id() const { return id_; }

  friend KahlerPotential build_potential<S>(const BackgroundPtr<S>&,
                                            const ScalarField<S>&, S);

 private:
  BackgroundPtr<S> bg_;
  ScalarField<S> phi_;
  HermitianField<S> hess_, metric_, inverse_metric_;
  ScalarField<S> density_, weight_;
  S min_eig_ = 0;
  std::uint64_t id_ = 0;
};

/// Assemble all caches; fails with NotKahler when the smallest eigenvalue of
/// g_phi relative to g0' drops below delta_floor.
template <typename S>
KahlerPotential<S> build_potential(const BackgroundPtr<S>& bg,
                                   const ScalarField<S>& phi, S delta_floor) {
  KahlerPotential<S> P;
  P.bg_ = bg;
  P.phi_ = phi;
  P.hess_ = complex_hessian(phi);
  P.metric_ = bg->metric() + P.hess_;
  auto [lo, hi] = relative_eigen_range(P.metric_, bg->metric());
  P.min_eig_ = lo;
  if (!(lo >= delta_floor)) throw NotKahler(lo);
  P.inverse_metric_ = P.metric_.inverse();
  const typename ScalarField<S>::Array det_ratio =
      (P.metric_.det() * bg->metric().det().inverse()).real();
  P.density_ = ScalarField<S>(phi.grid(), det_ratio);
  P.weight_ = P.density_ * bg->volume_density();
  P.id_ = detail::fnv1a(phi.values().data(),
                        sizeof(S) * static_cast<std::size_t>(phi.values().size()));
  return P;
}

/// Rescale a candidate potential so the smallest eigenvalue of g0' + i ddbar f
/// relative to g0' equals the requested margin.  Keeps random initial data
/// inside the Kahler cone independently of mode content.
template <typename S>
ScalarField<S> scale_to_margin(const BackgroundPtr<S>& bg, ScalarField<S> f,
                               S margin) {
  HermitianField<S> H = complex_hessian(f);
  auto [lo, hi] = relative_eigen_range(H, bg->metric());
  if (lo >= 0) return f;  // already nonnegative curvature contribution
  f *= (1 - margin) / (-lo);
  return f;
}

/// Integral against the potential's volume form omega_phi^n/n!.
template <typename S>
S integrate_mu(const KahlerPotential<S>& P, const ScalarField<S>& f) {
  return integrate(f, P.measure_weight());
}

template <typename S>
S volume(const KahlerPotential<S>& P) {
  return P.measure_weight().mean();
}

/// Tangent vector at a potential: a field with zero mean against
/// omega_phi^n/n!, tagged with the id of its base point.
template <typename S = double>
struct TangentVector {
  ScalarField<S> psi;
  std::uint64_t base_id = 0;
};

/// Project the weighted mean out of a field to land in T_phi H.
template <typename S>
ScalarField<S> tangent_project(const KahlerPotential<S>& P, ScalarField<S> f) {
  f -= integrate_mu(P, f) / volume(P);
  return f;
}

template <typename S>
TangentVector<S> make_tangent(const KahlerPotential<S>& P, ScalarField<S> f,
                              bool project = true) {
  if (project) f = tangent_project(P, std::move(f));
  return TangentVector<S>{std::move(f), P.id()};
}

}  // namespace kahlerlab

#endif

#ifndef KAHLERLAB_SOLVERS_HPP
#define KAHLERLAB_SOLVERS_HPP

#include <functional>
#include <limits>
#include <optional>
#include <variant>

#include "kahlerlab/operators.hpp"

namespace kahlerlab {

template <typename S = double>
struct SolveOptions {
  S tol = S(1e-10);   // relative residual, unweighted l2
  int max_iter = 0;   // 0: 10 * total points
};

/// How the additive constant of a kernel-bearing solve is fixed:
/// ZeroMean sets int u dmu = 0, Tangency sets int u dmu = value.
struct ZeroMean {};
struct Tangency {
  double value = 0;
};
using ConstantPolicy = std::variant<ZeroMean, Tangency>;

template <typename S = double>
struct SolveResult {
  ScalarField<S> u;
  S dropped_mass = 0;
  int iterations = 0;
  S residual = 0;
};

namespace detail {

/// Preconditioned conjugate gradient on the rho-weighted self-adjoint form:
/// the caller passes the weighted operator Ah(u) ~ w * A(u) assembled so that
/// it is exactly symmetric in plain discrete L^2 (see WeightedLaplacian), and
/// the original right-hand side b of A u = b.  Convergence is judged by the
/// relative residual of the original system, recovered as r/w.
template <typename S, typename Op, typename Pre>
std::pair<int, S> pcg(const char* name, const GridPtr& grid, Op&& Ah,
                      Pre&& Minv, const typename ScalarField<S>::Array& b,
                      const typename ScalarField<S>::Array& w,
                      typename ScalarField<S>::Array& x, S tol, int max_iter,
                      bool project_mean) {
  using Array = typename ScalarField<S>::Array;
  auto dot = [](const Array& a, const Array& c) { return (a * c).mean(); };
  auto project = [&](Array& a) {
    if (project_mean) a -= a.mean();
  };

  const S bnorm = std::sqrt(b.square().mean());
  x = Array::Zero(b.size());
  if (bnorm < S(1e-300)) return {0, 0};

  Array bh = (w * b).eval();
  if (project_mean)
    bh = drop_derivative_null_modes(ScalarField<S>(grid, std::move(bh))).values();
  auto resnorm = [&](const Array& rh) {
    return std::sqrt((rh / w).square().mean()) / bnorm;
  };

  Array r = bh;
  Array z = Minv(r);
  project(z);
  Array p = z;
  S rz = dot(r, z);
  S res = 1;
  S stagnation_mark = std::numeric_limits<S>::max();
  int it = 0;
  for (; it < max_iter; ++it) {
    if (it % 500 == 499) {
      // bail early when 500 iterations bring less than a 2x improvement
      if (res > stagnation_mark / 2) throw NoConvergence(name, res, it);
      stagnation_mark = res;
    }
    Array q = Ah(p);
    project(q);
    const S pq = dot(p, q);
    if (!(pq > 0) || !std::isfinite(pq)) {
      r = bh - Ah(x);
      project(r);
      z = Minv(r);
      project(z);
      p = z;
      rz = dot(r, z);
      continue;
    }
    const S alpha = rz / pq;
    x += alpha * p;
    r -= alpha * q;
    res = resnorm(r);
    if (res <= tol) {
      Array rt = bh - Ah(x);
      project(rt);
      res = resnorm(rt);
      if (res <= tol) return {it + 1, res};
      r = rt;
    } else if ((it + 1) % 64 == 0) {
      r = bh - Ah(x);
      project(r);
    }
    z = Minv(r);
    project(z);
    const S rz_new = dot(r, z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw NoConvergence(name, res, it);
}

template <typename S>
void apply_policy(const KahlerPotential<S>& P, ScalarField<S>& u,
                  const ConstantPolicy& policy) {
  const S vol = volume(P);
  const S m = integrate_mu(P, u);
  if (std::holds_alternative<ZeroMean>(policy))
    u -= m / vol;
  else
    u += (std::get<Tangency>(policy).value - m) / vol;
}

}  // namespace detail

/// Green-operator solve Delta_phi u = f - m/vol_0 with m = int f dmu
/// returned as the solvability defect; the additive constant follows the
/// policy.  Preconditioned by the flat inverse Laplacian.
template <typename S>
SolveResult<S> poisson_solve(const KahlerPotential<S>& P,
                             const ScalarField<S>& f,
                             const ConstantPolicy& policy = ZeroMean{},
                             const SolveOptions<S>& opts = {}) {
  using Array = typename ScalarField<S>::Array;
  const GridPtr& g = P.grid();
  const S vol = volume(P);
  SolveResult<S> out;
  out.dropped_mass = integrate_mu(P, f);
  Array b = -(f.values() - out.dropped_mass / vol);
  const WeightedLaplacian<S> L(P);
  auto Ah = [&](const Array& v) { return (-L.apply(v)).eval(); };
  auto Minv = [&](const Array& r) {
    return (-flat_inverse_laplacian(ScalarField<S>(g, r)).values()).eval();
  };
  const int cap = opts.max_iter > 0 ? opts.max_iter : 10 * static_cast<int>(g->size());
  Array x;
  std::tie(out.iterations, out.residual) = detail::pcg<S>(
      "poisson_solve", g, Ah, Minv, b, P.measure_weight().values(), x, opts.tol,
      cap, true);
  out.u = ScalarField<S>(g, std::move(x));
  detail::apply_policy(P, out.u, policy);
  return out;
}

/// (Delta_phi - I) u = f; no kernel, no constant ambiguity.
template <typename S>
SolveResult<S> helmholtz_solve(const KahlerPotential<S>& P,
                               const ScalarField<S>& f,
                               const SolveOptions<S>& opts = {}) {
  using Array = typename ScalarField<S>::Array;
  const GridPtr& g = P.grid();
  SolveResult<S> out;
  Array b = -f.values();
  const WeightedLaplacian<S> L(P);
  const Array& w = P.measure_weight().values();
  auto Ah = [&](const Array& v) { return (w * v - L.apply(v)).eval(); };
  auto Minv = [&](const Array& r) {
    return flat_combination_inverse(ScalarField<S>(g, r), S(1), S(1), S(0))
        .values();
  };
  const int cap = opts.max_iter > 0 ? opts.max_iter : 10 * static_cast<int>(g->size());
  Array x;
  std::tie(out.iterations, out.residual) = detail::pcg<S>(
      "helmholtz_solve", g, Ah, Minv, b, P.measure_weight().values(), x, opts.tol,
      cap, false);
  out.u = ScalarField<S>(g, std::move(x));
  return out;
}

/// [alpha - beta Delta_phi + gamma Delta_phi^2] u = f.  For alpha > 0 the
/// operator is invertible and dropped_mass = 0; for alpha = 0 the mu-mean
/// defect of f is projected out, reported, and the constant follows the
/// policy.  A policy passed with alpha > 0 shifts the solution by a constant,
/// which realizes the tangency multiplier alpha * c on the right-hand side.
template <typename S>
SolveResult<S> combination_solve(const KahlerPotential<S>& P,
                                 const ScalarField<S>& f,
                                 const MetricParams<S>& params,
                                 const std::optional<ConstantPolicy>& policy =
                                     std::nullopt,
                                 const SolveOptions<S>& opts = {}) {
  using Array = typename ScalarField<S>::Array;
  const GridPtr& g = P.grid();
  const S al = params.alpha, be = params.beta, ga = params.gamma;
  SolveResult<S> out;
  Array b = f.values();
  const bool kernel = (al == 0);
  if (kernel) {
    out.dropped_mass = integrate_mu(P, f);
    b -= out.dropped_mass / volume(P);
  }
  const WeightedLaplacian<S> L(P);
  const Array& w = P.measure_weight().values();
  const Array winv = w.inverse();
  auto Ah = [&](const Array& v) {
    Array acc = (al * (w * v)).eval();
    if (be != 0 || ga != 0) {
      Array l1 = L.apply(v);
      if (be != 0) acc -= be * l1;
      if (ga != 0) acc += ga * L.apply((winv * l1).eval());
    }
    return acc;
  };
  auto Minv = [&](const Array& r) {
    return flat_combination_inverse(ScalarField<S>(g, r), al, be, ga).values();
  };
  const int cap = opts.max_iter > 0 ? opts.max_iter : 10 * static_cast<int>(g->size());
  Array x;
  std::tie(out.iterations, out.residual) = detail::pcg<S>(
      "combination_solve", g, Ah, Minv, b, P.measure_weight().values(), x,
      opts.tol, cap, kernel);
  out.u = ScalarField<S>(g, std::move(x));
  if (policy) detail::apply_policy(P, out.u, *policy);
  return out;
}

}  // namespace kahlerlab

#endif

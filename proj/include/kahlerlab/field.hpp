#ifndef KAHLERLAB_FIELD_HPP
#define KAHLERLAB_FIELD_HPP

#include <Eigen/Core>
#include <complex>
#include <functional>
#include <utility>

#include "kahlerlab/grid.hpp"

namespace kahlerlab {

/// Real scalar field sampled on a periodic grid.  Values are immutable by
/// convention once a field is shared; all operations return new fields.
template <typename Scalar = double>
class ScalarField {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  ScalarField() = default;
  explicit ScalarField(GridPtr grid) : grid_(std::move(grid)) {
    values_ = Array::Zero(grid_->size());
  }
  ScalarField(GridPtr grid, Array values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->size())
      throw Error("field size does not match grid");
  }

  static ScalarField constant(GridPtr grid, Scalar c) {
    ScalarField f(grid);
    f.values_.setConstant(c);
    return f;
  }

  /// Sample an analytic function of the 2n torus coordinates.
  static ScalarField sample(
      GridPtr grid, const std::function<Scalar(const std::vector<Scalar>&)>& fn) {
    ScalarField f(grid);
    const int d = grid->dim();
    std::vector<Scalar> x(d);
    for (Eigen::Index p = 0; p < grid->size(); ++p) {
      for (int a = 0; a < d; ++a) x[a] = static_cast<Scalar>(grid->coord(p, a));
      f.values_[p] = fn(x);
    }
    return f;
  }

  const GridPtr& grid() const { return grid_; }
  const Array& values() const { return values_; }
  Array& values() { return values_; }

  Scalar mean() const { return values_.mean(); }
  Scalar max_abs() const { return values_.abs().maxCoeff(); }
  bool all_finite() const { return values_.isFinite().all(); }

  ScalarField& operator+=(const ScalarField& o) { values_ += o.values_; return *this; }
  ScalarField& operator-=(const ScalarField& o) { values_ -= o.values_; return *this; }
  ScalarField& operator*=(Scalar s) { values_ *= s; return *this; }
  ScalarField& operator+=(Scalar s) { values_ += s; return *this; }
  ScalarField& operator-=(Scalar s) { values_ -= s; return *this; }

 private:
  GridPtr grid_;
  Array values_;
};

template <typename S>
ScalarField<S> operator+(ScalarField<S> a, const ScalarField<S>& b) { a += b; return a; }
template <typename S>
ScalarField<S> operator-(ScalarField<S> a, const ScalarField<S>& b) { a -= b; return a; }
template <typename S>
ScalarField<S> operator*(S s, ScalarField<S> a) { a *= s; return a; }
template <typename S>
ScalarField<S> operator*(ScalarField<S> a, S s) { a *= s; return a; }
template <typename S>
ScalarField<S> operator+(ScalarField<S> a, S s) { a += s; return a; }
template <typename S>
ScalarField<S> operator-(ScalarField<S> a, S s) { a -= s; return a; }
template <typename S>
ScalarField<S> operator-(ScalarField<S> a) { a *= S(-1); return a; }

/// Pointwise product of two scalar fields (no dealiasing; see
/// spectral.hpp::multiply for the dealias-aware variant).
template <typename S>
ScalarField<S> operator*(const ScalarField<S>& a, const ScalarField<S>& b) {
  return ScalarField<S>(a.grid(), a.values() * b.values());
}

/// Pointwise complex n x n matrix field, n = 1 or 2, stored entry-wise.
/// Used for complex Hessians, metrics and their pointwise products.
template <typename Scalar = double>
class MatField {
 public:
  using Complex = std::complex<Scalar>;
  using CArray = Eigen::Array<Complex, Eigen::Dynamic, 1>;
  using RArray = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  MatField() = default;
  MatField(GridPtr grid, int n) : grid_(std::move(grid)), n_(n) {
    for (int e = 0; e < n_ * n_; ++e) m_[e] = CArray::Zero(grid_->size());
  }

  const GridPtr& grid() const { return grid_; }
  int n() const { return n_; }

  CArray& entry(int j, int k) { return m_[j * n_ + k]; }
  const CArray& entry(int j, int k) const { return m_[j * n_ + k]; }

  /// Pointwise matrix product.
  MatField operator*(const MatField& o) const {
    MatField r(grid_, n_);
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k) {
        r.entry(j, k) = entry(j, 0) * o.entry(0, k);
        for (int l = 1; l < n_; ++l) r.entry(j, k) += entry(j, l) * o.entry(l, k);
      }
    return r;
  }

  MatField operator+(const MatField& o) const {
    MatField r(grid_, n_);
    for (int e = 0; e < n_ * n_; ++e) r.m_[e] = m_[e] + o.m_[e];
    return r;
  }

  MatField operator-(const MatField& o) const {
    MatField r(grid_, n_);
    for (int e = 0; e < n_ * n_; ++e) r.m_[e] = m_[e] - o.m_[e];
    return r;
  }

  MatField scaled(Scalar s) const {
    MatField r(grid_, n_);
    for (int e = 0; e < n_ * n_; ++e) r.m_[e] = m_[e] * Complex(s, 0);
    return r;
  }

  CArray trace() const {
    CArray t = entry(0, 0);
    for (int j = 1; j < n_; ++j) t += entry(j, j);
    return t;
  }

  ScalarField<Scalar> real_trace() const {
    return ScalarField<Scalar>(grid_, trace().real());
  }

  /// Pointwise determinant (n <= 2).
  CArray det() const {
    if (n_ == 1) return entry(0, 0);
    return entry(0, 0) * entry(1, 1) - entry(0, 1) * entry(1, 0);
  }

  MatField adjoint_field() const {
    MatField r(grid_, n_);
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k) r.entry(j, k) = entry(k, j).conjugate();
    return r;
  }

  /// Pointwise inverse (n <= 2).  Caller guarantees nonvanishing determinant.
  MatField inverse() const {
    MatField r(grid_, n_);
    if (n_ == 1) {
      r.entry(0, 0) = entry(0, 0).inverse();
      return r;
    }
    const CArray d = det();
    r.entry(0, 0) = entry(1, 1) / d;
    r.entry(1, 1) = entry(0, 0) / d;
    r.entry(0, 1) = -entry(0, 1) / d;
    r.entry(1, 0) = -entry(1, 0) / d;
    return r;
  }

  /// Largest Hermitian asymmetry, a cache-coherence diagnostic.
  Scalar hermitian_defect() const {
    Scalar d = 0;
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k)
        d = std::max(d, (entry(j, k) - entry(k, j).conjugate()).abs().maxCoeff());
    return d;
  }

 private:
  GridPtr grid_;
  int n_ = 0;
  std::array<CArray, 4> m_;
};

/// Hermitian (1,1)-tensor field f_{j kbar}; stored as a full MatField with the
/// Hermitian constraint maintained by construction.
template <typename S = double>
using HermitianField = MatField<S>;

/// Eigenvalues of the Hermitian pencil (A, B): pointwise eigenvalues of
/// B^{-1} A, returned as (min over points, max over points).  A, B Hermitian,
/// B positive definite.
template <typename S>
std::pair<S, S> relative_eigen_range(const MatField<S>& A, const MatField<S>& B) {
  using RArray = typename MatField<S>::RArray;
  if (A.n() == 1) {
    RArray lam = (A.entry(0, 0).real() / B.entry(0, 0).real());
    return {lam.minCoeff(), lam.maxCoeff()};
  }
  const MatField<S> M = B.inverse() * A;
  RArray tr = M.trace().real();
  RArray dt = M.det().real();
  RArray disc = (tr * tr - 4 * dt).max(RArray::Zero(tr.size())).sqrt();
  RArray lo = (tr - disc) / 2;
  RArray hi = (tr + disc) / 2;
  return {lo.minCoeff(), hi.maxCoeff()};
}

}  // namespace kahlerlab

#endif

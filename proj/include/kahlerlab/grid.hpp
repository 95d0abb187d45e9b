#ifndef KAHLERLAB_GRID_HPP
#define KAHLERLAB_GRID_HPP

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "kahlerlab/errors.hpp"

namespace kahlerlab {

/// Uniform periodic grid on the flat torus C^n / (Z^n + i Z^n), n in {1,2}.
///
/// Real axes are ordered (x_1..x_n, y_1..y_n) with z_j = x_j + i y_j, each
/// axis of unit period sampled at `points_per_axis` points.  Samples are
/// stored row-major in axis order (last axis fastest).
class Grid {
 public:
  Grid(int n_complex, int points_per_axis, bool dealias_products = false)
      : n_complex_(n_complex),
        points_per_axis_(points_per_axis),
        dealias_products_(dealias_products) {
    if (n_complex != 1 && n_complex != 2)
      throw Unsupported("n_complex must be 1 or 2");
    if (points_per_axis < 8 || (points_per_axis & (points_per_axis - 1)) != 0)
      throw Unsupported("points_per_axis must be a power of two >= 8");
    const int n = points_per_axis_;
    wavenumbers_.resize(n);
    for (int i = 0; i < n; ++i) wavenumbers_[i] = (i < n / 2) ? i : i - n;
    size_ = 1;
    for (int a = 0; a < dim(); ++a) size_ *= n;
  }

  int n_complex() const { return n_complex_; }
  int dim() const { return 2 * n_complex_; }
  int points_per_axis() const { return points_per_axis_; }
  Eigen::Index size() const { return size_; }
  bool dealias_products() const { return dealias_products_; }
  void set_dealias_products(bool on) { dealias_products_ = on; }

  /// Integer wavenumber of index i along any axis, in FFT storage order.
  int wavenumber(int i) const { return wavenumbers_[i]; }
  /// Wavenumber with the unpaired Nyquist mode suppressed; used for symbols
  /// that must be odd under k -> -k so real fields stay real.
  int wavenumber_odd(int i) const {
    return (i == points_per_axis_ / 2) ? 0 : wavenumbers_[i];
  }

  /// Flat (row-major) index from per-axis indices.
  Eigen::Index flat_index(const std::vector<int>& idx) const {
    Eigen::Index r = 0;
    for (int a = 0; a < dim(); ++a) r = r * points_per_axis_ + idx[a];
    return r;
  }

  /// Coordinate of sample i along axis a, in [0,1).
  double coord(Eigen::Index flat, int axis) const {
    Eigen::Index stride = 1;
    for (int a = dim() - 1; a > axis; --a) stride *= points_per_axis_;
    const Eigen::Index i = (flat / stride) % points_per_axis_;
    return static_cast<double>(i) / points_per_axis_;
  }

  bool operator==(const Grid& o) const {
    return n_complex_ == o.n_complex_ && points_per_axis_ == o.points_per_axis_;
  }

 private:
  int n_complex_;
  int points_per_axis_;
  bool dealias_products_;
  Eigen::Index size_;
  std::vector<int> wavenumbers_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(int n_complex, int points_per_axis,
                         bool dealias_products = false) {
  return std::make_shared<const Grid>(n_complex, points_per_axis,
                                      dealias_products);
}

}  // namespace kahlerlab

#endif

#ifndef KAHLERLAB_RNG_HPP
#define KAHLERLAB_RNG_HPP

#include <cstdint>

#include "kahlerlab/spectral.hpp"

namespace kahlerlab {

/// splitmix64: tiny, fully deterministic across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [-1, 1).
  double sym() { return 2.0 * (next_u64() >> 11) * 0x1.0p-53 - 1.0; }
  /// Uniform in [0, 1).
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Random band-limited real field: independent coefficients on all modes
/// with max_a |k_a| <= kmax, k != 0, rescaled to the requested amplitude
/// (max-norm).  Zero mean by construction.
template <typename S = double>
ScalarField<S> random_band_limited(const GridPtr& g, int kmax, Rng& rng,
                                   S amplitude = S(1)) {
  CArray<S> c = CArray<S>::Zero(g->size());
  detail::for_each_index(*g, [&](Eigen::Index p, const std::vector<int>& idx) {
    bool in_band = true, zero = true, positive_half = false, decided = false;
    for (int a = 0; a < g->dim(); ++a) {
      const int k = g->wavenumber(idx[a]);
      if (std::abs(k) > kmax) in_band = false;
      if (k != 0) zero = false;
      if (!decided && k != 0) {
        positive_half = k > 0;
        decided = true;
      }
    }
    if (!in_band || zero || !positive_half) return;
    c[p] = std::complex<S>(static_cast<S>(rng.sym()), static_cast<S>(rng.sym()));
  });
  // mirror to make the synthesis real
  CArray<S> full = CArray<S>::Zero(g->size());
  detail::for_each_index(*g, [&](Eigen::Index p, const std::vector<int>& idx) {
    if (c[p] == std::complex<S>(0)) return;
    std::vector<int> neg(idx.size());
    for (int a = 0; a < g->dim(); ++a)
      neg[a] = (idx[a] == 0) ? 0 : g->points_per_axis() - idx[a];
    full[p] += c[p];
    full[g->flat_index(neg)] += std::conj(c[p]);
  });
  ScalarField<S> f = synthesize(g, std::move(full));
  const S m = f.max_abs();
  if (m > 0) f *= amplitude / m;
  return f;
}

}  // namespace kahlerlab

#endif

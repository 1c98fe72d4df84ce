#pragma once

#include <cmath>
#include <vector>

#include "paraspec/error.hpp"
#include "paraspec/grid.hpp"

namespace paraspec {

/**
 * Smooth dyadic partition of unity on frequency space.
 *
 *   chi(w)   = psi(|w| / R0)
 *   rho_j(w) = psi(|w| / (2^{j+1} R0)) - psi(|w| / (2^j R0)),   j >= 0
 *
 * where psi is a C-infinity step equal to 1 on [0, 3/4] and 0 on [1, inf).
 * Hence supp chi is the ball of radius R0, supp rho_j is the annulus
 * 2^j R0 [3/4, 2], blocks with |i - j| >= 2 are disjoint, and the partial sums
 * telescope: chi + sum_{j<=J} rho_j = psi(|w| / (2^{J+1} R0)).
 * Block index -1 denotes chi.
 */
class DyadicPartition {
 public:
  static constexpr double kInner = 0.75;

  explicit DyadicPartition(double base_radius = 1.0) : r0_(base_radius) {
    if (!(base_radius > 0.0)) throw InvalidInput("DyadicPartition: base radius must be positive");
  }

  double base_radius() const noexcept { return r0_; }

  /// C-infinity step: 1 for t <= 3/4, 0 for t >= 1.
  static double psi(double t) noexcept {
    if (t <= kInner) return 1.0;
    if (t >= 1.0) return 0.0;
    const double s = (1.0 - t) / (1.0 - kInner);  // in (0, 1), s -> 1 at t = 3/4
    const double a = std::exp(-1.0 / s);
    const double b = std::exp(-1.0 / (1.0 - s));
    return a / (a + b);
  }

  double chi(double w) const noexcept { return psi(w / r0_); }
  double rho(double w) const noexcept { return psi(w / (2.0 * r0_)) - psi(w / r0_); }

  /// Symbol of block j (j = -1 for chi) at |omega| = w.
  double block_symbol(int j, double w) const noexcept {
    if (j < 0) return chi(w);
    const double scale = std::ldexp(r0_, j);
    return psi(w / (2.0 * scale)) - psi(w / scale);
  }

  /// Largest block index needed for `grid`: ceil(log2(max|omega| / (3/4 R0))).
  int j_max(const TorusGrid& grid) const noexcept {
    const double wmax = grid.max_frequency();
    return std::max(0, int(std::ceil(std::log2(wmax / (kInner * r0_)))));
  }

  /// Indices j with a block that is nonzero somewhere on the lattice, in [-1, j_max].
  int block_count(const TorusGrid& grid) const noexcept { return j_max(grid) + 2; }

  /// Symbol values of block j at every stored mode (zero on Nyquist modes).
  std::vector<double> block_symbols(const TorusGrid& grid, int j) const {
    if (j < -1 || j > j_max(grid)) throw InvalidInput("DyadicPartition: block index out of range");
    std::vector<double> s(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid.is_nyquist(i)) continue;
      s[i] = block_symbol(j, std::sqrt(grid.frequency_sq(i)));
    }
    return s;
  }

 private:
  double r0_;
};

}  // namespace paraspec

#pragma once

#include <cmath>
#include <vector>

#include "paraspec/fft.hpp"
#include "paraspec/field.hpp"

namespace paraspec {

/// Side of the zero-padded grid used for dealiased products (3/2 rule).
inline int padded_modes(int n) { return 3 * n / 2; }

namespace detail {

// Scatter the non-negative-last-axis half of `f` into an M-point half spectrum.
inline void scatter_half(const Field& f, int m, std::vector<cplx>& half) {
  const auto& g = f.grid();
  const int dim = g.dim();
  const int n = g.modes_per_dim();
  const int hm = fft::half_len(m);
  half.assign(fft::half_size(dim, m), cplx{});
  const auto& c = f.coeffs();
  if (dim == 1) {
    for (int k = 0; k < n / 2; ++k) half[k] = c[k];
    return;
  }
  for (int i0 = 0; i0 < n; ++i0) {
    const int n0 = g.mode_of_index(i0);
    if (n0 == -n / 2) continue;
    const int row = ((n0 % m) + m) % m;
    for (int n1 = 0; n1 < n / 2; ++n1) half[std::size_t(row) * hm + n1] = c[std::size_t(i0) * n + n1];
  }
}

// Gather grid modes from an M-point half spectrum, scaled by `scale`.
inline void gather_half(const std::vector<cplx>& half, int m, double scale, Field& f) {
  const auto& g = f.grid();
  const int dim = g.dim();
  const int n = g.modes_per_dim();
  const int hm = fft::half_len(m);
  auto& c = f.coeffs();
  std::fill(c.begin(), c.end(), cplx{});
  if (dim == 1) {
    for (int k = 0; k < n / 2; ++k) c[k] = scale * half[k];
    for (int k = 1; k < n / 2; ++k) c[n - k] = std::conj(c[k]);
    c[0] = c[0].real();
    return;
  }
  for (int i0 = 0; i0 < n; ++i0) {
    const int n0 = g.mode_of_index(i0);
    if (n0 == -n / 2) continue;
    const int row = ((n0 % m) + m) % m;
    for (int n1 = 0; n1 < n / 2; ++n1) c[std::size_t(i0) * n + n1] = scale * half[std::size_t(row) * hm + n1];
  }
  // Negative last-axis modes by conjugation; enforce the n1 = 0 column pairing.
  for (int i0 = 0; i0 < n; ++i0) {
    const int n0 = g.mode_of_index(i0);
    if (n0 == -n / 2) continue;
    const int j0 = g.index_of_mode(-n0);
    for (int n1 = 1; n1 < n / 2; ++n1)
      c[std::size_t(j0) * n + (n - n1)] = std::conj(c[std::size_t(i0) * n + n1]);
  }
  for (int i0 = 0; i0 < n; ++i0) {
    const int n0 = g.mode_of_index(i0);
    if (n0 <= 0) continue;
    const int j0 = g.index_of_mode(-n0);
    const cplx avg = 0.5 * (c[std::size_t(i0) * n] + std::conj(c[std::size_t(j0) * n]));
    c[std::size_t(i0) * n] = avg;
    c[std::size_t(j0) * n] = std::conj(avg);
  }
  c[0] = c[0].real();
}

}  // namespace detail

/// Samples of `f` on the uniform M^dim lattice (M >= N), row-major, x = j L / M.
inline std::vector<double> padded_samples(const Field& f, int m) {
  const auto& g = f.grid();
  std::vector<cplx> half;
  detail::scatter_half(f, m, half);
  const std::size_t total = g.dim() == 1 ? std::size_t(m) : std::size_t(m) * m;
  std::vector<double> out(total);
  fft::c2r(g.dim(), m, half.data(), out.data());
  const double s = 1.0 / std::sqrt(g.volume());
  for (auto& v : out) v *= s;
  return out;
}

/// Band-limited projection onto `grid` of samples given on the M^dim lattice.
inline Field from_padded_samples(const TorusGrid& grid, const std::vector<double>& samples, int m,
                                 std::string label = {}) {
  const std::size_t total = grid.dim() == 1 ? std::size_t(m) : std::size_t(m) * m;
  if (samples.size() != total) throw InvalidInput("from_padded_samples: sample count mismatch");
  std::vector<cplx> half(fft::half_size(grid.dim(), m));
  fft::r2c(grid.dim(), m, samples.data(), half.data());
  Field f(grid, std::move(label));
  const double scale = std::sqrt(grid.volume()) / double(total);
  detail::gather_half(half, m, scale, f);
  return f;
}

/// Physical samples on the grid's own N^dim lattice. Rejects non-real fields.
inline std::vector<double> to_physical(const Field& f, double tol = 1e-12) {
  const double scale = std::max(1.0, norm(f));
  if (f.hermitian_defect() > tol * scale)
    throw InvalidInput("to_physical: field violates Hermitian symmetry beyond tolerance");
  return padded_samples(f, f.grid().modes_per_dim());
}

/// Field from samples on the grid's lattice (Nyquist content discarded).
inline Field from_physical(const TorusGrid& grid, const std::vector<double>& samples, std::string label = {}) {
  return from_padded_samples(grid, samples, grid.modes_per_dim(), std::move(label));
}

/**
 * Dealiased product f*g: both factors are sampled on the 3N/2 lattice,
 * multiplied, and truncated back to the grid. Exact (no aliasing) for
 * band-limited factors.
 */
inline Field pointwise_product(const Field& f, const Field& g) {
  f.check_same(g, "pointwise_product");
  const int m = padded_modes(f.grid().modes_per_dim());
  auto a = padded_samples(f, m);
  const auto b = padded_samples(g, m);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
  return from_padded_samples(f.grid(), a, m);
}

}  // namespace paraspec

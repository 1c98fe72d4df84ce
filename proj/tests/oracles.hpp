#pragma once
// Independent reference computations used by the tests. Nothing here calls
// FFTW: sums are written out directly from the Fourier-series definition.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "paraspec/field.hpp"

namespace oracle {

using paraspec::cplx;
using paraspec::Field;
using paraspec::Mode;
using paraspec::TorusGrid;

/// Random real field with Nyquist-free Hermitian coefficients, optionally band-limited to |n_i| < band.
inline Field random_field(const TorusGrid& g, unsigned seed, int band = -1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Field f(g);
  const int h = g.modes_per_dim() / 2;
  const int b = band < 0 ? h : band;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_nyquist(i)) continue;
    const Mode n = g.mode(i);
    if (std::abs(n[0]) >= b || std::abs(n[1]) >= b) continue;
    const std::size_t j = g.negated(i);
    if (j < i) continue;
    if (j == i) {
      f[i] = nd(rng);
    } else {
      const cplx c(nd(rng), nd(rng));
      f[i] = c;
      f[j] = std::conj(c);
    }
  }
  return f;
}

/// Value of the Fourier series of f at a point x (dim entries used).
inline double evaluate(const Field& f, double x0, double x1) {
  const auto& g = f.grid();
  const double L = g.side_length();
  cplx s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (f[i] == cplx{}) continue;
    const Mode n = g.mode(i);
    const double ph = 2.0 * std::numbers::pi * (n[0] * x0 + (g.dim() == 2 ? n[1] * x1 : 0.0)) / L;
    s += f[i] * std::polar(1.0, ph);
  }
  return s.real() / std::pow(L, 0.5 * g.dim());
}

/// Samples on an M^dim lattice by direct summation (O(M^dim N^dim)).
inline std::vector<double> naive_samples(const Field& f, int m) {
  const auto& g = f.grid();
  const double h = g.side_length() / m;
  std::vector<double> out;
  if (g.dim() == 1) {
    for (int j = 0; j < m; ++j) out.push_back(evaluate(f, j * h, 0.0));
  } else {
    for (int j0 = 0; j0 < m; ++j0)
      for (int j1 = 0; j1 < m; ++j1) out.push_back(evaluate(f, j0 * h, j1 * h));
  }
  return out;
}

/// Projection of lattice samples (M^dim, M >= 2N) onto the grid's modes by direct quadrature.
inline Field naive_project(const TorusGrid& g, const std::vector<double>& s, int m) {
  const double L = g.side_length();
  const double w = std::pow(L / m, g.dim()) / std::pow(L, 0.5 * g.dim());
  Field f(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_nyquist(i)) continue;
    const Mode n = g.mode(i);
    cplx acc = 0.0;
    if (g.dim() == 1) {
      for (int j = 0; j < m; ++j) acc += s[j] * std::polar(1.0, -2.0 * std::numbers::pi * n[0] * j / m);
    } else {
      for (int j0 = 0; j0 < m; ++j0)
        for (int j1 = 0; j1 < m; ++j1)
          acc += s[std::size_t(j0) * m + j1] * std::polar(1.0, -2.0 * std::numbers::pi * (n[0] * j0 + n[1] * j1) / m);
    }
    f[i] = w * acc;
  }
  return f;
}

/// Non-Nyquist complex modes of a grid, in storage order.
inline std::vector<std::size_t> active_modes(const TorusGrid& g) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!g.is_nyquist(i)) out.push_back(i);
  return out;
}

/**
 * Dense Galerkin matrix of -Laplacian + V + shift on the non-Nyquist complex
 * modes: entries <e_p, V e_q> = L^{-dim/2} V^(p - q) with V^ taken from the
 * potential's own coefficients (an exact convolution; the potential is
 * band-limited, so no quadrature is involved).
 */
inline Eigen::MatrixXcd dense_hamiltonian(const Field& V, double shift) {
  const auto& g = V.grid();
  const auto modes = active_modes(g);
  const Eigen::Index n = Eigen::Index(modes.size());
  const double L = g.side_length();
  const double norm = 1.0 / std::pow(L, 0.5 * g.dim());
  const int h = g.modes_per_dim() / 2;
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const Mode p = g.mode(modes[std::size_t(a)]);
    for (Eigen::Index b = 0; b < n; ++b) {
      const Mode q = g.mode(modes[std::size_t(b)]);
      const Mode d{p[0] - q[0], p[1] - q[1]};
      if (d[0] <= -h || d[0] >= h || d[1] <= -h || d[1] >= h) continue;
      A(a, b) = norm * V.at(d);
    }
    const double w = 2.0 * std::numbers::pi / L;
    A(a, a) += w * w * (double(p[0]) * p[0] + double(p[1]) * p[1]) + shift;
  }
  return A;
}

inline std::vector<double> dense_eigenvalues(const Field& V, double shift) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense_hamiltonian(V, shift), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

}  // namespace oracle

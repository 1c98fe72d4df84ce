#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "paraspec/hamiltonian.hpp"
#include "paraspec/lanczos.hpp"

namespace paraspec {

/// Sorted lowest eigenpairs of a HamiltonianOp with solver diagnostics.
struct SpectrumResult {
  std::vector<double> eigenvalues;
  std::vector<Field> eigenvectors;  ///< orthonormal in L^2
  std::vector<double> residuals;    ///< ||H v - Lambda v||
  /// Index ranges [first, last] of eigenvalues equal to 1e-7 relative.
  std::vector<std::pair<std::size_t, std::size_t>> multiplets;
  std::size_t iterations = 0;  ///< operator applications
  std::size_t restarts = 0;
  double tolerance = 0.0;

  std::size_t size() const noexcept { return eigenvalues.size(); }
};

inline std::vector<std::pair<std::size_t, std::size_t>> find_multiplets(const std::vector<double>& v,
                                                                         double rel = 1e-7) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j + 1 < v.size() && std::abs(v[j + 1] - v[i]) <= rel * std::max(1.0, std::abs(v[i]))) ++j;
    if (j > i) out.emplace_back(i, j);
    i = j + 1;
  }
  return out;
}

/// Start-vector weights (1 + |omega|^2)^{-1/2}: low modes dominate, which speeds up the bottom of the spectrum.
inline std::vector<double> smooth_start_weights(const PackedLayout& layout) {
  const auto& g = layout.grid();
  std::vector<double> w(layout.dimension(), 1.0);
  const auto& modes = layout.modes();
  for (std::size_t q = 0; q < modes.size(); ++q) {
    const double s = 1.0 / std::sqrt(1.0 + g.frequency_sq(modes[q]));
    w[2 * q] = s;
    w[2 * q + 1] = s;
  }
  return w;
}

namespace detail {

inline SpectrumResult to_spectrum(const HamiltonianOp& op, const LanczosResult& lr, double tol) {
  SpectrumResult r;
  r.eigenvalues = lr.values;
  r.residuals = lr.residuals;
  r.iterations = lr.matvecs;
  r.restarts = lr.restarts;
  r.tolerance = tol;
  r.multiplets = find_multiplets(r.eigenvalues);
  for (std::size_t i = 0; i < lr.vectors.size(); ++i) {
    Field v = op.layout().unpack(lr.vectors[i], "eigenvector_" + std::to_string(i + 1));
    // Deterministic sign: the largest-magnitude packed entry is positive.
    const auto& x = lr.vectors[i];
    const auto it = std::max_element(x.begin(), x.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    if (*it < 0.0) v *= -1.0;
    r.eigenvectors.push_back(std::move(v));
  }
  for (std::size_t i = 0; i < r.residuals.size(); ++i)
    if (r.residuals[i] > tol)
      throw ConvergenceError("lowest_eigenpairs: residual " + std::to_string(r.residuals[i]) + " of pair " +
                                 std::to_string(i + 1) + " exceeds tolerance",
                             r.residuals[i]);
  return r;
}

}  // namespace detail

/**
 * Lowest n eigenpairs by Lanczos. `start`, when given, is used as the first
 * Krylov vector (it only affects the iteration count, not the answer).
 */
inline SpectrumResult lowest_eigenpairs(const HamiltonianOp& op, std::size_t n, double tol = 1e-9,
                                        std::uint64_t seed = 1, std::size_t basis_size = 0,
                                        const Field* start = nullptr) {
  if (!(tol > 0.0)) throw InvalidInput("lowest_eigenpairs: tolerance must be positive");
  LanczosOptions opt;
  opt.tol = tol;
  opt.seed = seed;
  opt.basis_size = basis_size;
  opt.start_weights = smooth_start_weights(op.layout());
  if (start) opt.start = op.layout().pack(resample(*start, op.grid()));
  return detail::to_spectrum(op, lanczos_smallest(op, n, opt), tol);
}

/**
 * Lowest eigenpairs of -Laplacian + V + shift, warm-started through a cascade
 * of Galerkin truncations of the same operator (N/2^k modes, down to
 * `coarsest` per axis). Only the start vector of the final solve depends on
 * the cascade.
 */
inline SpectrumResult lowest_eigenpairs_multilevel(const Field& potential, double shift, std::size_t n,
                                                   double tol = 1e-9, std::uint64_t seed = 1, int coarsest = 32) {
  const auto& g = potential.grid();
  std::vector<TorusGrid> levels{g};
  while (levels.back().modes_per_dim() / 2 >= coarsest && levels.back().modes_per_dim() % 4 == 0)
    levels.emplace_back(g.dim(), g.side_length(), levels.back().modes_per_dim() / 2);
  std::optional<Field> guess;
  for (std::size_t k = levels.size(); k-- > 0;) {
    const HamiltonianOp op(resample(potential, levels[k]), shift);
    const double level_tol = k == 0 ? tol : std::max(tol, 1e-4);
    Field mix(levels[k]);
    if (guess) mix = resample(*guess, levels[k]);
    auto r = lowest_eigenpairs(op, n, level_tol, seed, 0, guess ? &mix : nullptr);
    if (k == 0) return r;
    // Next start: a fixed combination of the coarse eigenvectors.
    Field s(levels[k]);
    for (std::size_t i = 0; i < r.size(); ++i) s.axpy(1.0 / double(i + 1), r.eigenvectors[i]);
    guess = s;
  }
  throw ConvergenceError("lowest_eigenpairs_multilevel: empty cascade", 0.0);
}

inline double rayleigh_quotient(const HamiltonianOp& op, const Field& f) {
  const double nn = inner(f, f);
  if (!(nn > 0.0)) throw InvalidInput("rayleigh_quotient: zero field");
  return inner(apply_H(op, f), f) / nn;
}

struct HeatResult {
  Field u;
  double tail_bound = 0.0;  ///< e^{-t Lambda_{n_modes}} ||u0||
  std::size_t modes_used = 0;
};

/// Truncated spectral representation of e^{-tH} u0 over the first n_modes pairs of `sr`.
inline HeatResult heat_semigroup(const SpectrumResult& sr, const Field& u0, double t, std::size_t n_modes) {
  if (!(t >= 0.0)) throw InvalidInput("heat_semigroup: time must be nonnegative");
  if (n_modes == 0 || n_modes > sr.size())
    throw InvalidInput("heat_semigroup: n_modes must be in [1, number of computed pairs]");
  HeatResult h{Field(u0.grid(), "heat(t=" + std::to_string(t) + ")"), 0.0, n_modes};
  for (std::size_t i = 0; i < n_modes; ++i) {
    const Field& e = sr.eigenvectors[i];
    e.check_same(u0, "heat_semigroup");
    h.u.axpy(std::exp(-t * sr.eigenvalues[i]) * inner(e, u0), e);
  }
  h.tail_bound = std::exp(-t * sr.eigenvalues[n_modes - 1]) * norm(u0);
  return h;
}

}  // namespace paraspec

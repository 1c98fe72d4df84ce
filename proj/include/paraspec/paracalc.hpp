#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "paraspec/field.hpp"
#include "paraspec/multiplier.hpp"
#include "paraspec/partition.hpp"
#include "paraspec/random.hpp"
#include "paraspec/transform.hpp"

namespace paraspec {

/// Integrability / summability exponent of a Besov norm.
enum class Exponent { two, infinity };

struct BesovNormReport {
  double alpha = 0.0;
  Exponent p = Exponent::infinity;
  Exponent q = Exponent::infinity;
  int j_min = -1;
  int j_max = -1;
  /// 2^{j alpha} ||Delta_j u||_{L^p} for q = inf; 2^{2 j alpha} ||Delta_j u||^2 for q = 2.
  std::vector<double> per_block;
  double value = 0.0;
};

inline Field lp_block(const Field& f, int j, const DyadicPartition& P) {
  const auto sym = P.block_symbols(f.grid(), j);
  Field out(f.grid());
  for (std::size_t i = 0; i < sym.size(); ++i) out[i] = sym[i] * f[i];
  return out;
}

/// All blocks Delta_{-1} .. Delta_{j_max}; element b holds block j = b - 1.
inline std::vector<Field> lp_blocks(const Field& f, const DyadicPartition& P) {
  std::vector<Field> blocks;
  const int jm = P.j_max(f.grid());
  blocks.reserve(std::size_t(jm + 2));
  for (int j = -1; j <= jm; ++j) blocks.push_back(lp_block(f, j, P));
  return blocks;
}

/// Direct Sobolev norm (sum_n (1 + |omega_n|^2)^s |f_n|^2)^{1/2}.
inline double sobolev_norm(const Field& f, double s) {
  const auto& g = f.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) acc += std::pow(1.0 + g.frequency_sq(i), s) * std::norm(f[i]);
  return std::sqrt(acc);
}

inline double sup_norm(const Field& f) {
  const auto s = padded_samples(f, padded_modes(f.grid().modes_per_dim()));
  double m = 0.0;
  for (double v : s) m = std::max(m, std::abs(v));
  return m;
}

/**
 * Besov norm estimate over the finite block range of the grid. Supported
 * combinations: (inf, inf) for C^alpha and (2, 2) for H^alpha. Sup norms are
 * taken over samples on the 3N/2 lattice; L^2 norms come from Parseval.
 */
inline BesovNormReport besov_norm(const Field& f, double alpha, Exponent p, Exponent q, const DyadicPartition& P) {
  if (p != q) throw InvalidInput("besov_norm: only (inf,inf) and (2,2) are supported");
  BesovNormReport r;
  r.alpha = alpha;
  r.p = p;
  r.q = q;
  r.j_max = P.j_max(f.grid());
  for (int j = -1; j <= r.j_max; ++j) {
    const Field b = lp_block(f, j, P);
    const double w = std::exp2(j * alpha);
    if (q == Exponent::infinity) {
      r.per_block.push_back(w * sup_norm(b));
    } else {
      const double n2 = norm(b);
      r.per_block.push_back(w * w * n2 * n2);
    }
  }
  if (q == Exponent::infinity) {
    r.value = *std::max_element(r.per_block.begin(), r.per_block.end());
  } else {
    double s = 0.0;
    for (double t : r.per_block) s += t;
    r.value = std::sqrt(s);
  }
  return r;
}

inline double holder_norm(const Field& f, double alpha, const DyadicPartition& P) {
  return besov_norm(f, alpha, Exponent::infinity, Exponent::infinity, P).value;
}

namespace detail {

inline std::vector<std::vector<double>> block_samples(const Field& f, const DyadicPartition& P, int m) {
  std::vector<std::vector<double>> out;
  for (const auto& b : lp_blocks(f, P)) out.push_back(padded_samples(b, m));
  return out;
}

}  // namespace detail

/// f < g = sum_j S_{j-1} f * Delta_j g, with S_{j-1} f = sum_{i <= j-2} Delta_i f.
inline Field paraproduct_less(const Field& f, const Field& g, const DyadicPartition& P) {
  f.check_same(g, "paraproduct_less");
  const int m = padded_modes(f.grid().modes_per_dim());
  const auto fb = detail::block_samples(f, P, m);
  const auto gb = detail::block_samples(g, P, m);
  const std::size_t n = fb.front().size();
  std::vector<double> low(n, 0.0), acc(n, 0.0);
  // Block index b corresponds to j = b - 1; S_{j-1} collects blocks i <= j - 2, i.e. b' <= b - 2.
  for (std::size_t b = 2; b < gb.size(); ++b) {
    const auto& add = fb[b - 2];
    for (std::size_t k = 0; k < n; ++k) low[k] += add[k];
    const auto& gj = gb[b];
    for (std::size_t k = 0; k < n; ++k) acc[k] += low[k] * gj[k];
  }
  return from_padded_samples(f.grid(), acc, m);
}

/// f > g, the mirror of f < g: f > g = g < f.
inline Field paraproduct_greater(const Field& f, const Field& g, const DyadicPartition& P) {
  return paraproduct_less(g, f, P);
}

/// Resonant product f o g = sum_{|i-j| <= 1} Delta_i f * Delta_j g.
inline Field resonant(const Field& f, const Field& g, const DyadicPartition& P) {
  f.check_same(g, "resonant");
  const int m = padded_modes(f.grid().modes_per_dim());
  const auto fb = detail::block_samples(f, P, m);
  const auto gb = detail::block_samples(g, P, m);
  const std::size_t n = fb.front().size();
  const std::size_t nb = fb.size();
  std::vector<double> acc(n, 0.0), near(n);
  for (std::size_t b = 0; b < nb; ++b) {
    std::fill(near.begin(), near.end(), 0.0);
    for (std::size_t c = (b == 0 ? 0 : b - 1); c <= std::min(nb - 1, b + 1); ++c)
      for (std::size_t k = 0; k < n; ++k) near[k] += gb[c][k];
    for (std::size_t k = 0; k < n; ++k) acc[k] += fb[b][k] * near[k];
  }
  return from_padded_samples(f.grid(), acc, m);
}

/// sum over axes of d_a f < d_a g.
inline Field gradient_paraproduct(const Field& f, const Field& g, const DyadicPartition& P) {
  Field out = paraproduct_less(derivative(f, 0), derivative(g, 0), P);
  if (f.grid().dim() == 2) out += paraproduct_less(derivative(f, 1), derivative(g, 1), P);
  return out;
}

/// R(f, g, h) = (f < g) o h - f (g o h).
inline Field commutator_R(const Field& f, const Field& g, const Field& h, const DyadicPartition& P) {
  f.check_same(g, "commutator_R");
  f.check_same(h, "commutator_R");
  return resonant(paraproduct_less(f, g, P), h, P) - pointwise_product(f, resonant(g, h, P));
}

/// C(f, g) = m(D)(f < g) - f < m(D) g.
inline Field commutator_C(const Field& f, const Field& g, const MultiplierSpec& m, const DyadicPartition& P) {
  f.check_same(g, "commutator_C");
  return apply_multiplier(m, paraproduct_less(f, g, P)) - paraproduct_less(f, apply_multiplier(m, g), P);
}

/**
 * Lattice white-noise coefficients g_n for one seed: g_0 real N(0,1), other
 * pairs (a + ib)/sqrt(2) with g_{-n} = conj(g_n). Each mode draws from its own
 * counter-based stream, so a coarser grid sees the restriction of a finer one.
 */
inline std::vector<cplx> gaussian_coefficients(const TorusGrid& grid, std::uint64_t seed) {
  std::vector<cplx> g(grid.size(), cplx{});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.is_nyquist(i)) continue;
    const Mode n = grid.mode(i);
    const bool canonical = n[0] > 0 || (n[0] == 0 && n[1] > 0);
    if (n[0] == 0 && n[1] == 0) {
      rng::Stream s(rng::key(seed, 0, 0));
      g[i] = s.normal();
    } else if (canonical) {
      rng::Stream s(rng::key(seed, n[0], n[1]));
      auto [a, b] = s.normal_pair();
      const cplx v = cplx(a, b) / std::sqrt(2.0);
      g[i] = v;
      g[grid.negated(i)] = std::conj(v);
    }
  }
  return g;
}

/**
 * Random test field of C^alpha type: coefficients (1 + |omega|^2)^{-(alpha + dim/2)/2} g_n,
 * so each dyadic block has sup norm of order 2^{-j alpha} (up to a sqrt(j) factor).
 */
inline Field synth_field(double alpha, const TorusGrid& grid, std::uint64_t seed) {
  auto g = gaussian_coefficients(grid, seed ^ 0x5EEDF1E1Dull);
  const double e = -0.5 * (alpha + 0.5 * grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) g[i] *= std::pow(1.0 + grid.frequency_sq(i), e);
  return Field(grid, std::move(g), "synth(alpha=" + std::to_string(alpha) + ")");
}

}  // namespace paraspec

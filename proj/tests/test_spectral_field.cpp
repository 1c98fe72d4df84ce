#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <numbers>

#include "oracles.hpp"
#include "paraspec/multiplier.hpp"
#include "paraspec/snapshot.hpp"
#include "paraspec/transform.hpp"

using namespace paraspec;

TEST(TorusGrid, RejectsInvalidParameters) {
  EXPECT_THROW(TorusGrid(3, 1.0, 8), InvalidInput);
  EXPECT_THROW(TorusGrid(2, 0.0, 8), InvalidInput);
  EXPECT_THROW(TorusGrid(2, 1.0, 7), InvalidInput);
  EXPECT_THROW(TorusGrid(2, 1.0, 2), InvalidInput);
}

TEST(TorusGrid, FrequencyLatticeIsOddAndDual) {
  const TorusGrid g(2, 3.0, 8);
  EXPECT_EQ(g.frequency_sq(0), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_nyquist(i)) continue;
    const auto w = g.frequency(i), v = g.frequency(g.negated(i));
    EXPECT_DOUBLE_EQ(w[0], -v[0]);
    EXPECT_DOUBLE_EQ(w[1], -v[1]);
    EXPECT_EQ(g.flat_index(g.mode(i)), i);
  }
  EXPECT_DOUBLE_EQ(g.spacing() * g.modes_per_dim(), g.side_length());
  EXPECT_DOUBLE_EQ(g.frequency_unit() * g.spacing() * g.modes_per_dim(), 2.0 * std::numbers::pi);
}

TEST(ToPhysical, ConstantMode) {
  const TorusGrid g(2, 2.0, 8);
  Field f(g);
  f[0] = 3.0;
  for (double s : to_physical(f)) EXPECT_NEAR(s, 3.0 / 2.0, 1e-14);
  EXPECT_NEAR(Field::constant(g, 0.7).mean(), 0.7, 1e-15);
}

TEST(ToPhysical, CosineWave) {
  const TorusGrid g(2, 1.0, 8);
  const Field f = Field::mode_pair(g, {1, 0}, 1.0);  // e_k + e_{-k}
  const auto s = to_physical(f);
  for (int j0 = 0; j0 < 8; ++j0)
    for (int j1 = 0; j1 < 8; ++j1)
      EXPECT_NEAR(s[std::size_t(j0) * 8 + j1], 2.0 * std::cos(2.0 * std::numbers::pi * j0 / 8.0), 1e-14);
}

TEST(ToPhysical, MatchesNaiveDft) {
  for (int dim : {1, 2}) {
    const TorusGrid g(dim, 1.7, 8);
    const Field f = oracle::random_field(g, 11 + dim);
    const auto fast = to_physical(f);
    const auto slow = oracle::naive_samples(f, 8);
    double scale = 0.0;
    for (double v : slow) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < fast.size(); ++i) EXPECT_NEAR(fast[i], slow[i], 1e-12 * scale);
  }
}

TEST(ToPhysical, RoundTripAndParseval) {
  const TorusGrid g(2, 2.5, 32);
  const Field f = oracle::random_field(g, 5);
  const auto s = to_physical(f);
  EXPECT_LE(relative_error(from_physical(g, s), f), 1e-12);
  double l2 = 0.0;
  for (double v : s) l2 += v * v;
  EXPECT_NEAR(l2 * g.cell_volume(), inner(f, f), 1e-11 * inner(f, f));
}

TEST(ToPhysical, RejectsNonHermitian) {
  const TorusGrid g(2, 1.0, 8);
  Field f(g);
  f[g.flat_index({1, 2})] = 1.0;
  EXPECT_THROW(to_physical(f), InvalidInput);
  f.symmetrize();
  EXPECT_NO_THROW(to_physical(f));
}

TEST(Multiplier, LaplacianKillsConstants) {
  const TorusGrid g(2, 1.0, 16);
  EXPECT_EQ(norm(laplacian(Field::constant(g, 4.0))), 0.0);
}

TEST(Multiplier, SigmaOnSingleMode) {
  const TorusGrid g(2, 1.3, 16);
  const Mode n{2, -3};
  const Field f = Field::mode_pair(g, n, cplx(0.5, 0.25));
  const Field s = apply_multiplier(MultiplierSpec::sigma(), f);
  const double w2 = g.frequency_sq(g.flat_index(n));
  EXPECT_NEAR(std::abs(s.at(n) - (-1.0 / (1.0 + w2)) * f.at(n)), 0.0, 1e-15);
}

TEST(Multiplier, HelmholtzInverseComposition) {
  const TorusGrid g(2, 2.0, 32);
  const double a = 3.5;
  const Field f = oracle::random_field(g, 9);
  const Field u = apply_multiplier(MultiplierSpec::sigma_a(a), f);
  const Field back = a * u - laplacian(u);  // (a - Laplacian) sigma_a(D) f
  EXPECT_LE(relative_error(back, -1.0 * f), 1e-12);
}

TEST(Multiplier, LinearAndPreservesSymmetry) {
  const TorusGrid g(2, 1.0, 16);
  const Field f = oracle::random_field(g, 1), h = oracle::random_field(g, 2);
  const auto m = MultiplierSpec::sigma_a(0.4);
  const Field lhs = apply_multiplier(m, 2.0 * f + (-3.0) * h);
  const Field rhs = 2.0 * apply_multiplier(m, f) + (-3.0) * apply_multiplier(m, h);
  EXPECT_LE(relative_error(lhs, rhs), 1e-12);
  EXPECT_EQ(apply_multiplier(m, f).hermitian_defect(), 0.0);
}

TEST(Multiplier, RejectsNonFiniteSymbol) {
  const TorusGrid g(2, 1.0, 8);
  EXPECT_THROW(apply_multiplier(MultiplierSpec::sigma_a(0.0), Field::constant(g, 1.0)), InvalidInput);
}

TEST(PointwiseProduct, IdentityAndCommutativity) {
  const TorusGrid g(2, 1.0, 16);
  const Field f = oracle::random_field(g, 3), h = oracle::random_field(g, 4);
  const Field one = Field::constant(g, 1.0);
  EXPECT_LE(relative_error(pointwise_product(f, one), f), 1e-13);
  EXPECT_LE(relative_error(pointwise_product(f, h), pointwise_product(h, f)), 1e-14);
}

TEST(PointwiseProduct, CosineSquared) {
  const TorusGrid g(2, 1.0, 16);
  // cos(2 pi x0) = (e_k + e_{-k}) / 2 with L = 1.
  const Field c = 0.5 * Field::mode_pair(g, {1, 0}, 1.0);
  const Field p = pointwise_product(c, c);
  EXPECT_NEAR(p.mean(), 0.5, 1e-14);
  EXPECT_NEAR(std::abs(p.at({2, 0}) - 0.25), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(p.at({-2, 0}) - 0.25), 0.0, 1e-14);
}

TEST(PointwiseProduct, MatchesRefinedGridOracle) {
  for (int dim : {1, 2}) {
    const TorusGrid g(dim, 1.4, 8);
    const Field f = oracle::random_field(g, 21), h = oracle::random_field(g, 22);
    const int m = 16;
    auto a = oracle::naive_samples(f, m);
    const auto b = oracle::naive_samples(h, m);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
    EXPECT_LE(relative_error(pointwise_product(f, h), oracle::naive_project(g, a, m)), 1e-10);
  }
}

TEST(PointwiseProduct, ExactConvolutionOfLowModes) {
  const TorusGrid g(2, 1.0, 24);
  const Field f = oracle::random_field(g, 31, 4), h = oracle::random_field(g, 32, 4);
  const Field p = pointwise_product(f, h);
  Field conv(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (f[i] == cplx{} || h[j] == cplx{}) continue;
      const Mode a = g.mode(i), b = g.mode(j);
      conv[g.flat_index({a[0] + b[0], a[1] + b[1]})] += f[i] * h[j];
    }
  conv *= 1.0 / std::sqrt(g.volume());
  EXPECT_LE(relative_error(p, conv), 1e-12);
}

TEST(Snapshot, RoundTrip) {
  const TorusGrid g(2, 1.5, 8);
  const Field f = oracle::random_field(g, 8);
  Field named = f;
  named.set_label("xi_eps");
  const Field back = snapshot::decode(snapshot::encode(named));
  EXPECT_EQ(back.grid(), g);
  EXPECT_EQ(back.label(), "xi_eps");
  EXPECT_LE(relative_error(back, f), 1e-6);  // complex64 payload
  auto bytes = snapshot::encode(named);
  bytes.pop_back();
  EXPECT_THROW(snapshot::decode(bytes), InvalidInput);
}

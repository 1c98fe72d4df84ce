#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "paraspec/noise.hpp"
#include "paraspec/spectrum.hpp"

using namespace paraspec;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

EnhancedNoise noise_on(const TorusGrid& g, std::uint64_t seed, double eps = 0.25) {
  return enhance(sample_white_noise(g, seed), MollifierSpec{MollifierSpec::Kind::sharp, eps});
}

}  // namespace

TEST(PackedLayout, IsometricRoundTrip) {
  const TorusGrid g(2, 1.3, 16);
  const PackedLayout lay(g);
  EXPECT_EQ(lay.dimension(), 15u * 15u);
  const Field f = oracle::random_field(g, 4), h = oracle::random_field(g, 5);
  const auto x = lay.pack(f), y = lay.pack(h);
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
  EXPECT_NEAR(dot, inner(f, h), 1e-12 * norm(f) * norm(h));
  EXPECT_LE(relative_error(lay.unpack(x), f), 1e-15);
}

TEST(HamiltonianOp, ZeroNoiseFourierEigenbasis) {
  const TorusGrid g(2, 1.0, 16);
  const HamiltonianOp op(Field(g), 0.75);
  const Mode n{2, -1};
  const Field e = Field::mode_pair(g, n, cplx(0.3, -0.2));
  const Field He = apply_H(op, e);
  const double lam = kTwoPi * kTwoPi * 5.0 + 0.75;
  EXPECT_LE(relative_error(He, lam * e), 1e-13);
}

TEST(HamiltonianOp, ConstantPotentialActsAsShiftedLaplacian) {
  const TorusGrid g(2, 2.0, 16);
  const double c = 5.0;
  const HamiltonianOp op(Field::constant(g, c), 0.0);
  const Field f = oracle::random_field(g, 7);
  EXPECT_LE(relative_error(apply_H(op, f), c * f - laplacian(f)), 1e-13);
}

TEST(HamiltonianOp, MatchesDenseAssembly) {
  const TorusGrid g(2, 1.5, 16);
  const auto e = noise_on(g, 3);
  const HamiltonianOp op(e);
  const Eigen::MatrixXcd A = oracle::dense_hamiltonian(e.xi_eps, e.c_eps);
  const auto modes = oracle::active_modes(g);
  for (unsigned s = 0; s < 3; ++s) {
    const Field f = oracle::random_field(g, 100 + s);
    Eigen::VectorXcd x(Eigen::Index(modes.size()));
    for (std::size_t k = 0; k < modes.size(); ++k) x[Eigen::Index(k)] = f[modes[k]];
    const Eigen::VectorXcd y = A * x;
    Field dense(g);
    for (std::size_t k = 0; k < modes.size(); ++k) dense[modes[k]] = y[Eigen::Index(k)];
    EXPECT_LE(relative_error(apply_H(op, f), dense), 1e-10);
  }
}

TEST(HamiltonianOp, Symmetric) {
  const TorusGrid g(2, 1.0, 32);
  const auto e = noise_on(g, 8, 0.1);
  const HamiltonianOp op(e);
  for (unsigned s = 0; s < 5; ++s) {
    const Field f = oracle::random_field(g, 2 * s), h = oracle::random_field(g, 2 * s + 1);
    const double d = inner(apply_H(op, f), h) - inner(f, apply_H(op, h));
    EXPECT_LE(std::abs(d), 1e-9 * norm(f) * norm(h));
  }
  EXPECT_EQ(op.fft_count(), 2 * op.apply_count());
}

TEST(Spectrum, ZeroNoiseLaplacian) {
  const TorusGrid g(2, 1.0, 32);
  const auto r = lowest_eigenpairs(HamiltonianOp(Field(g), 0.0), 9, 1e-9);
  const double l1 = kTwoPi * kTwoPi;
  EXPECT_NEAR(r.eigenvalues[0], 0.0, 1e-8);
  for (int i = 1; i <= 4; ++i) EXPECT_NEAR(r.eigenvalues[std::size_t(i)], l1, 1e-8);
  for (int i = 5; i <= 8; ++i) EXPECT_NEAR(r.eigenvalues[std::size_t(i)], 2 * l1, 1e-8);
  ASSERT_EQ(r.multiplets.size(), 2u);
  EXPECT_EQ(r.multiplets[0], std::make_pair(std::size_t(1), std::size_t(4)));
  // Ground state is the constant.
  EXPECT_LE(relative_error(r.eigenvectors[0], Field::constant(g, 1.0)), 1e-8);
}

TEST(Spectrum, OrthonormalSortedAndResidualsBelowTolerance) {
  const TorusGrid g(2, 1.0, 32);
  const auto r = lowest_eigenpairs(HamiltonianOp(noise_on(g, 5, 0.1)), 8, 1e-9);
  EXPECT_TRUE(std::is_sorted(r.eigenvalues.begin(), r.eigenvalues.end()));
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_NEAR(norm(r.eigenvectors[i]), 1.0, 1e-10);
    EXPECT_LE(r.residuals[i], 1e-9);
    for (std::size_t j = 0; j < i; ++j) EXPECT_LE(std::abs(inner(r.eigenvectors[i], r.eigenvectors[j])), 1e-8);
  }
}

TEST(Spectrum, MatchesDenseDiagonalization) {
  const TorusGrid g(2, 1.0, 16);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto e = noise_on(g, seed);
    const auto r = lowest_eigenpairs(HamiltonianOp(e), 6, 1e-10);
    const auto dense = oracle::dense_eigenvalues(e.xi_eps, e.c_eps);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(r.eigenvalues[i], dense[i], 1e-8) << "seed " << seed;
  }
}

TEST(Spectrum, ConstantShiftMovesEveryEigenvalue) {
  const TorusGrid g(2, 1.0, 16);
  const auto e = noise_on(g, 2);
  const auto a = lowest_eigenpairs(HamiltonianOp(e.xi_eps, e.c_eps), 5, 1e-10);
  const auto b = lowest_eigenpairs(HamiltonianOp(e.xi_eps, e.c_eps + 5.0), 5, 1e-10);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(b.eigenvalues[i] - a.eigenvalues[i], 5.0, 1e-8);
  EXPECT_NEAR(std::abs(inner(a.eigenvectors[0], b.eigenvectors[0])), 1.0, 1e-8);
}

TEST(Spectrum, DeterministicGivenSeed) {
  const TorusGrid g(2, 1.0, 16);
  const HamiltonianOp op(noise_on(g, 4));
  const auto a = lowest_eigenpairs(op, 4, 1e-9, 17), b = lowest_eigenpairs(op, 4, 1e-9, 17);
  EXPECT_EQ(a.eigenvalues, b.eigenvalues);
}

TEST(Rayleigh, GroundStateAndLowerBound) {
  const TorusGrid g(2, 1.0, 32);
  const HamiltonianOp op(noise_on(g, 6, 0.1));
  const auto r = lowest_eigenpairs(op, 1, 1e-9);
  EXPECT_NEAR(rayleigh_quotient(op, r.eigenvectors[0]), r.eigenvalues[0], 1e-9);
  for (unsigned s = 0; s < 100; ++s)
    EXPECT_GE(rayleigh_quotient(op, oracle::random_field(g, 500 + s, 4 + int(s % 12))), r.eigenvalues[0] - 1e-6);
  EXPECT_THROW(rayleigh_quotient(op, Field(g)), InvalidInput);
  EXPECT_NEAR(rayleigh_quotient(HamiltonianOp(Field(g), 0.0), Field::constant(g, 2.0)), 0.0, 1e-14);
}

TEST(Rayleigh, MinMaxOverRandomSubspaces) {
  const TorusGrid g(2, 1.0, 16);
  const HamiltonianOp op(noise_on(g, 9));
  const std::size_t n = 3;
  const auto r = lowest_eigenpairs(op, n, 1e-10);
  const std::size_t dim = op.dimension();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd V(dim, n);
    for (Eigen::Index i = 0; i < V.size(); ++i) V.data()[i] = nd(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(V);
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, n);
    Eigen::MatrixXd AQ(dim, n);
    for (Eigen::Index j = 0; j < Eigen::Index(n); ++j) op.apply(Q.col(j).data(), AQ.col(j).data());
    const Eigen::MatrixXd proj = Q.transpose() * AQ;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (proj + proj.transpose()));
    EXPECT_GE(es.eigenvalues().maxCoeff(), r.eigenvalues[n - 1] - 1e-8);
  }
}

TEST(Heat, ZeroNoiseModeDecay) {
  const TorusGrid g(2, 1.0, 16);
  const auto r = lowest_eigenpairs(HamiltonianOp(Field(g), 0.0), 5, 1e-10);
  const Field u0 = Field::mode_pair(g, {1, 0}, 1.0);
  const double t = 0.01;
  const auto h = heat_semigroup(r, u0, t, 5);
  EXPECT_LE(relative_error(h.u, std::exp(-t * kTwoPi * kTwoPi) * u0), 1e-8);
}

TEST(Heat, TimeZeroProjectsAndSemigroupHolds) {
  const TorusGrid g(2, 1.0, 16);
  const auto r = lowest_eigenpairs(HamiltonianOp(noise_on(g, 1)), 12, 1e-10);
  const Field u0 = oracle::random_field(g, 77, 3);
  const auto p = heat_semigroup(r, u0, 0.0, 12);
  // Projection is idempotent.
  EXPECT_LE(relative_error(heat_semigroup(r, p.u, 0.0, 12).u, p.u), 1e-10);
  const double s = 0.02, t = 0.03;
  const auto kt = heat_semigroup(r, heat_semigroup(r, u0, s, 12).u, t, 12);
  const auto kts = heat_semigroup(r, u0, s + t, 12);
  EXPECT_LE(norm(kt.u - kts.u), 2.0 * (kt.tail_bound + kts.tail_bound));
  EXPECT_THROW(heat_semigroup(r, u0, -1.0, 3), InvalidInput);
}

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "paraspec/error.hpp"
#include "paraspec/random.hpp"

namespace paraspec {

/// A symmetric linear operator on R^n given by its action.
template <class Op>
concept SymmetricOperator = requires(const Op& op, const double* x, double* y) {
  { op.dimension() } -> std::convertible_to<std::size_t>;
  op.apply(x, y);
};

struct LanczosOptions {
  double tol = 1e-9;              ///< absolute residual ||A v - theta v|| per pair
  std::size_t basis_size = 0;     ///< Krylov basis size; 0 picks max(2n + 30, 60)
  std::size_t max_matvecs = 200000;
  std::uint64_t seed = 1;         ///< start-vector seed
  /// Optional per-coordinate damping of the random start vector (e.g. smooth starts).
  std::vector<double> start_weights;
  /// Optional explicit start vector for the first run (e.g. a coarse-grid solution).
  std::vector<double> start;
  /// Confirm that no eigenvalue below the n-th was missed (needed for multiplicities).
  bool verify_multiplicity = true;
};

struct LanczosResult {
  std::vector<double> values;                 ///< ascending
  std::vector<std::vector<double>> vectors;   ///< orthonormal
  std::vector<double> residuals;              ///< explicit ||A v - theta v||
  std::size_t matvecs = 0;
  std::size_t restarts = 0;
  std::size_t runs = 0;
};

namespace detail {

struct RunOutput {
  std::vector<double> values;
  std::vector<Eigen::VectorXd> vectors;
  double best_residual = std::numeric_limits<double>::infinity();
  bool converged = false;
};

/**
 * One thick-restart Lanczos run (Wu-Simon) for the `want` smallest eigenpairs
 * of A restricted to the orthogonal complement of `locked`. Full
 * reorthogonalization against the basis and the locked vectors.
 */
template <SymmetricOperator Op>
RunOutput trlan_run(const Op& op, std::size_t want, const std::vector<Eigen::VectorXd>& locked,
                    Eigen::VectorXd start, std::size_t m, double tol, std::size_t& matvecs,
                    std::size_t max_matvecs, std::size_t& restarts, std::uint64_t seed) {
  const Eigen::Index n = Eigen::Index(op.dimension());
  m = std::min<std::size_t>(m, std::size_t(n) - locked.size());
  want = std::min(want, m);
  Eigen::MatrixXd Q(n, Eigen::Index(m + 1));
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(Eigen::Index(m), Eigen::Index(m));
  Eigen::VectorXd w(n);
  rng::Stream fresh(rng::key(seed, 0xB4EA4D0ull));

  auto project_locked = [&](Eigen::VectorXd& v) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& z : locked) v -= z.dot(v) * z;
  };
  auto random_unit = [&](Eigen::Index upto) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = fresh.normal();
    project_locked(v);
    for (int pass = 0; pass < 2; ++pass) {
      if (upto > 0) v -= Q.leftCols(upto) * (Q.leftCols(upto).transpose() * v);
    }
    return Eigen::VectorXd(v / v.norm());
  };

  project_locked(start);
  if (!(start.norm() > 0.0)) start = random_unit(0);
  Q.col(0) = start / start.norm();

  std::size_t k = 0;  // number of kept Ritz vectors after a restart
  double beta_last = 0.0;
  RunOutput out;
  while (true) {
    for (std::size_t j = k; j < m; ++j) {
      op.apply(Q.col(Eigen::Index(j)).data(), w.data());
      ++matvecs;
      project_locked(w);
      // Classical Gram-Schmidt, twice.
      Eigen::VectorXd h = Q.leftCols(Eigen::Index(j + 1)).transpose() * w;
      w -= Q.leftCols(Eigen::Index(j + 1)) * h;
      Eigen::VectorXd h2 = Q.leftCols(Eigen::Index(j + 1)).transpose() * w;
      w -= Q.leftCols(Eigen::Index(j + 1)) * h2;
      project_locked(w);
      T(Eigen::Index(j), Eigen::Index(j)) = h[Eigen::Index(j)] + h2[Eigen::Index(j)];
      double beta = w.norm();
      if (j + 1 < m) {
        if (beta <= 1e-13 * std::max(1.0, std::abs(T(Eigen::Index(j), Eigen::Index(j))))) {
          // Invariant subspace: continue with a fresh orthogonal direction.
          Q.col(Eigen::Index(j + 1)) = random_unit(Eigen::Index(j + 1));
          beta = 0.0;
        } else {
          Q.col(Eigen::Index(j + 1)) = w / beta;
        }
        T(Eigen::Index(j), Eigen::Index(j + 1)) = beta;
        T(Eigen::Index(j + 1), Eigen::Index(j)) = beta;
      } else {
        beta_last = beta;
        if (beta > 0.0) Q.col(Eigen::Index(m)) = w / beta;
        else Q.col(Eigen::Index(m)) = random_unit(Eigen::Index(m));
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const auto& theta = es.eigenvalues();
    const auto& S = es.eigenvectors();
    double worst = 0.0;
    for (std::size_t i = 0; i < want; ++i)
      worst = std::max(worst, std::abs(beta_last * S(Eigen::Index(m - 1), Eigen::Index(i))));
    out.best_residual = std::min(out.best_residual, worst);

    if (worst <= tol || matvecs >= max_matvecs) {
      out.converged = worst <= tol;
      Eigen::MatrixXd Y = Q.leftCols(Eigen::Index(m)) * S.leftCols(Eigen::Index(want));
      for (std::size_t i = 0; i < want; ++i) {
        out.values.push_back(theta[Eigen::Index(i)]);
        out.vectors.emplace_back(Y.col(Eigen::Index(i)));
      }
      return out;
    }

    // Thick restart: keep the lowest `keep` Ritz vectors plus the residual direction.
    const std::size_t keep = std::min(m - 2, std::max(want + (m - want) / 2, want + 1));
    Eigen::MatrixXd kept = Q.leftCols(Eigen::Index(m)) * S.leftCols(Eigen::Index(keep));
    Q.leftCols(Eigen::Index(keep)) = kept;
    Q.col(Eigen::Index(keep)) = Q.col(Eigen::Index(m));
    T.setZero();
    for (std::size_t i = 0; i < keep; ++i) {
      T(Eigen::Index(i), Eigen::Index(i)) = theta[Eigen::Index(i)];
      const double s = beta_last * S(Eigen::Index(m - 1), Eigen::Index(i));
      T(Eigen::Index(i), Eigen::Index(keep)) = s;
      T(Eigen::Index(keep), Eigen::Index(i)) = s;
    }
    // Row `keep` of T is completed by the next expansion step (its diagonal and beyond).
    k = keep;
    ++restarts;
  }
}

}  // namespace detail

/**
 * Smallest `count` eigenpairs of a symmetric operator by thick-restart Lanczos
 * with full reorthogonalization. Converged pairs are locked and the search is
 * restarted on the deflated operator until `count` pairs are known; with
 * `verify_multiplicity` a final run on the deflated operator confirms that no
 * eigenvalue below the largest returned one was missed, which a single Krylov
 * sequence cannot see for degenerate eigenvalues.
 */
template <SymmetricOperator Op>
LanczosResult lanczos_smallest(const Op& op, std::size_t count, const LanczosOptions& opt = {}) {
  const std::size_t n = op.dimension();
  if (count == 0) throw InvalidInput("lanczos_smallest: need at least one eigenpair");
  if (count >= n) throw InvalidInput("lanczos_smallest: too many eigenpairs requested for the dimension");
  const std::size_t m = opt.basis_size ? opt.basis_size : std::max<std::size_t>(2 * count + 30, 60);

  LanczosResult res;
  std::vector<Eigen::VectorXd> locked;
  std::vector<double> locked_values;
  std::uint64_t run_seed = opt.seed;

  if (!opt.start.empty() && opt.start.size() != n) throw InvalidInput("lanczos_smallest: start vector has wrong size");
  auto start_vector = [&](std::uint64_t s) {
    Eigen::VectorXd v(Eigen::Index(n), 1);
    if (s == opt.seed && !opt.start.empty()) {
      // Warm start, lightly perturbed so that every eigendirection is represented.
      rng::Stream st(rng::key(s, 0x57A27ull));
      const double nrm = std::sqrt(std::inner_product(opt.start.begin(), opt.start.end(), opt.start.begin(), 0.0));
      for (std::size_t i = 0; i < n; ++i) {
        const double w = opt.start_weights.empty() ? 1.0 : opt.start_weights[i];
        v[Eigen::Index(i)] = opt.start[i] + 1e-6 * nrm * w * st.normal() / std::sqrt(double(n));
      }
      return v;
    }
    rng::Stream st(rng::key(s, 0x57A27ull));
    for (std::size_t i = 0; i < n; ++i) {
      v[Eigen::Index(i)] = st.normal();
      if (!opt.start_weights.empty()) v[Eigen::Index(i)] *= opt.start_weights[i];
    }
    return v;
  };

  double best = std::numeric_limits<double>::infinity();
  auto run = [&](std::size_t want) {
    auto r = detail::trlan_run(op, want, locked, start_vector(run_seed), std::min(m, n - locked.size()), opt.tol,
                               res.matvecs, opt.max_matvecs, res.restarts, run_seed);
    ++res.runs;
    ++run_seed;
    best = std::min(best, r.best_residual);
    if (!r.converged)
      throw ConvergenceError("lanczos_smallest: no convergence within " + std::to_string(opt.max_matvecs) +
                                 " operator applications (best residual " + std::to_string(r.best_residual) + ")",
                             r.best_residual);
    return r;
  };

  while (locked.size() < count) {
    auto r = run(count - locked.size());
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      locked.push_back(r.vectors[i]);
      locked_values.push_back(r.values[i]);
    }
  }

  if (opt.verify_multiplicity && count > 1) {
    while (locked.size() + 1 < n) {
      std::vector<double> sorted = locked_values;
      std::sort(sorted.begin(), sorted.end());
      const double top = sorted[count - 1];
      auto r = run(1);
      if (r.values[0] >= top - opt.tol) break;
      locked.push_back(r.vectors[0]);
      locked_values.push_back(r.values[0]);
    }
  }

  std::vector<std::size_t> order(locked.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return locked_values[a] < locked_values[b]; });
  order.resize(count);

  // Orthonormalize (modified Gram-Schmidt in eigenvalue order) and refine with a Rayleigh quotient.
  std::vector<Eigen::VectorXd> basis;
  Eigen::VectorXd av(Eigen::Index(n), 1);
  for (std::size_t idx : order) {
    Eigen::VectorXd v = locked[idx];
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) v -= b.dot(v) * b;
    v /= v.norm();
    op.apply(v.data(), av.data());
    ++res.matvecs;
    const double theta = v.dot(av);
    res.values.push_back(theta);
    res.residuals.push_back((av - theta * v).norm());
    basis.push_back(v);
  }
  for (const auto& b : basis) res.vectors.emplace_back(b.data(), b.data() + b.size());
  return res;
}

}  // namespace paraspec

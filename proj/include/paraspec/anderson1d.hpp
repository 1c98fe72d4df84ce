#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "paraspec/error.hpp"
#include "paraspec/parallel.hpp"
#include "paraspec/random.hpp"
#include "paraspec/stats.hpp"

namespace paraspec::anderson1d {

/// Brownian path on {0, h, ..., L}: B(0) = 0 and i.i.d. N(0, h) increments.
struct BrownianPath {
  std::uint64_t seed = 0;
  double L = 1.0;
  double h = 1e-3;
  std::vector<double> values;  ///< B(x_i), size steps() + 1

  std::size_t steps() const { return values.size() - 1; }
  double increment(std::size_t i) const { return values[i + 1] - values[i]; }

  static BrownianPath sample(double L, std::size_t steps, std::uint64_t seed) {
    if (!(L > 0.0) || steps == 0) throw InvalidInput("BrownianPath: need L > 0 and at least one step");
    BrownianPath p;
    p.seed = seed;
    p.L = L;
    p.h = L / double(steps);
    p.values.assign(steps + 1, 0.0);
    rng::Stream s(rng::key(seed, 0x1D));
    const double sd = std::sqrt(p.h);
    for (std::size_t i = 0; i < steps; ++i) p.values[i + 1] = p.values[i] + sd * s.normal();
    return p;
  }
  static BrownianPath zero(double L, std::size_t steps) {
    if (!(L > 0.0) || steps == 0) throw InvalidInput("BrownianPath: need L > 0 and at least one step");
    BrownianPath p;
    p.L = L;
    p.h = L / double(steps);
    p.values.assign(steps + 1, 0.0);
    return p;
  }
  /// Same path observed on every `factor`-th grid point.
  BrownianPath coarsen(std::size_t factor) const {
    if (factor == 0 || steps() % factor) throw InvalidInput("BrownianPath::coarsen: factor must divide the step count");
    BrownianPath p;
    p.seed = seed;
    p.L = L;
    p.h = h * double(factor);
    for (std::size_t i = 0; i <= steps(); i += factor) p.values.push_back(values[i]);
    return p;
  }
};

enum class RiccatiScheme {
  exact_cell,     ///< closed-form Riccati flow on each cell of the piecewise-linear path
  semi_implicit,  ///< semi-implicit Euler with the Y = -1/X chart near explosions
};

struct RiccatiOptions {
  RiccatiScheme scheme = RiccatiScheme::exact_cell;
  double x_cap = 1e3;
  /// semi_implicit: substep = substep_scale / (1 + |X| + sqrt|q|).
  double substep_scale = 0.05;
  double min_substep = 1e-14;
  /// Stop integrating once this many explosions are recorded (0 = never).
  std::size_t stop_after = 0;
};

struct RiccatiTrace {
  double lambda = 0.0;
  std::vector<double> explosion_positions;  ///< strictly increasing, in (0, L]
  double final_value = 0.0;                 ///< X(L); infinite when the path ends on an explosion
  bool exploded = false;                    ///< true when the final state is X = -inf/+inf
  bool truncated = false;                   ///< stopped early by stop_after
  std::size_t count() const { return explosion_positions.size(); }
};

namespace detail {

/// Zero of the solution of f'' = q f, (f, f')(0) = (f0, g0), in (0, tau] (assumes one exists).
inline double zero_in_cell(double q, double f0, double g0, double tau) {
  double t;
  if (q > 0.0) {
    const double k = std::sqrt(q);
    t = std::atanh(std::clamp(-f0 * k / g0, -1.0, 1.0)) / k;
  } else if (q < 0.0) {
    const double k = std::sqrt(-q);
    t = std::atan(-f0 * k / g0) / k;
    if (t <= 0.0) t += std::numbers::pi / k;
  } else {
    t = -f0 / g0;
  }
  return std::clamp(std::isfinite(t) ? t : tau, 0.0, tau);
}

inline void record(RiccatiTrace& tr, double x) {
  if (!tr.explosion_positions.empty() && x <= tr.explosion_positions.back())
    x = std::nextafter(tr.explosion_positions.back(), std::numeric_limits<double>::infinity());
  tr.explosion_positions.push_back(x);
}

inline RiccatiTrace trace_exact(const BrownianPath& p, double lambda, const RiccatiOptions& opt) {
  // Linearization X = f'/f: f'' = q f on each cell, explosions are sign changes of f.
  RiccatiTrace tr;
  tr.lambda = lambda;
  double f = 0.0, g = 1.0;
  const double h = p.h;
  for (std::size_t i = 0; i < p.steps(); ++i) {
    const double q = p.increment(i) / h - lambda;
    const double x0 = double(i) * h;
    // Substeps shorter than half an oscillation period hold at most one zero.
    std::size_t sub = 1;
    if (q < 0.0) sub = std::max<std::size_t>(1, std::size_t(std::ceil(std::sqrt(-q) * h / (0.5 * std::numbers::pi))));
    const double tau = h / double(sub);
    double c, s_over, s_times;  // propagator [[c, s_over], [s_times, c]]
    if (q > 0.0) {
      const double k = std::sqrt(q);
      c = std::cosh(k * tau);
      s_over = std::sinh(k * tau) / k;
      s_times = k * std::sinh(k * tau);
    } else if (q < 0.0) {
      const double k = std::sqrt(-q);
      c = std::cos(k * tau);
      s_over = std::sin(k * tau) / k;
      s_times = -k * std::sin(k * tau);
    } else {
      c = 1.0;
      s_over = tau;
      s_times = 0.0;
    }
    for (std::size_t j = 0; j < sub; ++j) {
      const double fn = c * f + s_over * g;
      const double gn = s_times * f + c * g;
      if ((f > 0.0 && fn <= 0.0) || (f < 0.0 && fn >= 0.0)) {
        record(tr, x0 + double(j) * tau + zero_in_cell(q, f, g, tau));
        if (opt.stop_after && tr.count() >= opt.stop_after) {
          tr.truncated = true;
          tr.final_value = -std::numeric_limits<double>::infinity();
          tr.exploded = true;
          return tr;
        }
      }
      const double scale = std::max(std::abs(fn), std::abs(gn));
      f = fn / scale;
      g = gn / scale;
    }
  }
  tr.exploded = f == 0.0;
  tr.final_value = tr.exploded ? -std::numeric_limits<double>::infinity() : g / f;
  return tr;
}

inline RiccatiTrace trace_semi_implicit(const BrownianPath& p, double lambda, const RiccatiOptions& opt) {
  RiccatiTrace tr;
  tr.lambda = lambda;
  const double cap = opt.x_cap, h = p.h;
  // Start in the Y chart at Y = 0, i.e. X(0) = +inf.
  bool in_y = true;
  double v = 0.0;
  for (std::size_t i = 0; i < p.steps(); ++i) {
    const double q = p.increment(i) / h - lambda;
    const double x0 = double(i) * h;
    double t = 0.0;
    while (t < h) {
      const double xmag = in_y ? (v == 0.0 ? cap : std::min(cap, 1.0 / std::abs(v))) : std::abs(v);
      double dt = std::min(h - t, opt.substep_scale / (1.0 + xmag + std::sqrt(std::abs(q))));
      if (dt < opt.min_substep)
        throw ConvergenceError("ricatti_count: substep refinement floor reached at x = " + std::to_string(x0 + t),
                               dt);
      if (in_y) {
        // Y' = -1 + q Y^2, semi-implicit in the quadratic term.
        const double den = 1.0 - q * v * dt;
        const double vn = (v - dt) / den;
        if (v > 0.0 && vn <= 0.0) {
          record(tr, x0 + t + std::min(dt, v));
          if (opt.stop_after && tr.count() >= opt.stop_after) {
            tr.truncated = tr.exploded = true;
            tr.final_value = -std::numeric_limits<double>::infinity();
            return tr;
          }
        }
        v = vn;
        if (std::abs(v) > 1.0 / cap) {
          in_y = false;
          v = -1.0 / v;
        }
      } else {
        // X' = q - X^2, semi-implicit: X_{n+1} (1 + X_n dt) = X_n + q dt.
        v = (v + q * dt) / (1.0 + v * dt);
        if (std::abs(v) > cap) {
          in_y = true;
          v = -1.0 / v;
        }
      }
      t += dt;
    }
  }
  if (in_y) {
    tr.exploded = v == 0.0;
    tr.final_value = v == 0.0 ? -std::numeric_limits<double>::infinity() : -1.0 / v;
  } else {
    tr.final_value = v;
  }
  return tr;
}

}  // namespace detail

/// Integrates dX = -(lambda + X^2) dx + dB from X(0) = +inf, recording explosions to -inf.
inline RiccatiTrace riccati_trace(const BrownianPath& path, double lambda, const RiccatiOptions& opt = {}) {
  if (!std::isfinite(lambda)) throw InvalidInput("riccati_trace: lambda must be finite");
  if (path.values.size() < 2 || path.values.front() != 0.0) throw InvalidInput("riccati_trace: invalid path");
  return opt.scheme == RiccatiScheme::exact_cell ? detail::trace_exact(path, lambda, opt)
                                                 : detail::trace_semi_implicit(path, lambda, opt);
}

/// Number of explosions before L, i.e. the number of Dirichlet eigenvalues below lambda.
inline std::size_t ricatti_count(const BrownianPath& path, double lambda, const RiccatiOptions& opt = {}) {
  return riccati_trace(path, lambda, opt).count();
}

/**
 * Lowest n Dirichlet eigenvalues by bisection on the counting function; each is
 * the midpoint of a bracket of width <= tol.
 */
inline std::vector<double> eigenvalues_by_shooting(const BrownianPath& path, std::size_t n, double tol = 1e-9,
                                                   RiccatiOptions opt = {}) {
  if (n == 0) throw InvalidInput("eigenvalues_by_shooting: n must be >= 1");
  if (!(tol > 0.0)) throw InvalidInput("eigenvalues_by_shooting: tol must be positive");
  opt.stop_after = n;
  std::map<double, std::size_t> seen;  // lambda -> min(count, n)
  auto count = [&](double lam) {
    auto it = seen.find(lam);
    if (it != seen.end()) return it->second;
    return seen[lam] = ricatti_count(path, lam, opt);
  };
  constexpr double limit = 1e12;
  double lo = -1.0;
  while (count(lo) > 0) {
    lo *= 2.0;
    if (lo < -limit)
      throw ConvergenceError("eigenvalues_by_shooting: no lower bracket above -1e12 (count " +
                                 std::to_string(count(lo)) + ")",
                             lo);
  }
  double hi = std::pow(double(n) * std::numbers::pi / path.L, 2) + 1.0;
  while (count(hi) < n) {
    hi = hi > 0.0 ? 2.0 * hi : 1.0;
    if (hi > limit)
      throw ConvergenceError("eigenvalues_by_shooting: fewer than n eigenvalues below 1e12 (count " +
                                 std::to_string(count(hi)) + ")",
                             hi);
  }
  std::vector<double> out;
  for (std::size_t k = 1; k <= n; ++k) {
    double a = lo, b = hi;
    for (const auto& [lam, c] : seen) {
      if (c < k) a = std::max(a, lam);
      else b = std::min(b, lam);
    }
    while (b - a > tol) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      (count(mid) >= k ? b : a) = mid;
    }
    out.push_back(0.5 * (a + b));
  }
  return out;
}

/**
 * Finite differences on m_grid cells: -d^2/dx^2 (Dirichlet) plus the potential
 * (B(x_{i+1}) - B(x_i)) / h at interior node i. Returns the n lowest eigenvalues.
 * The path's step count must be a multiple of m_grid. Eigenvalues come from Sturm
 * sequence bisection, so only O(m) memory is used.
 */
inline std::vector<double> fd_diagonalize(const BrownianPath& path, std::size_t m_grid, std::size_t n) {
  if (m_grid < 64) throw InvalidInput("fd_diagonalize: m_grid must be >= 64");
  if (path.steps() % m_grid) throw InvalidInput("fd_diagonalize: m_grid must divide the path's step count");
  if (n == 0 || n > m_grid - 1) throw InvalidInput("fd_diagonalize: n out of range");
  const std::size_t r = path.steps() / m_grid, m = m_grid - 1;
  const double h = path.L / double(m_grid), ih2 = 1.0 / (h * h);
  std::vector<double> diag(m);
  for (std::size_t i = 1; i <= m; ++i) diag[i - 1] = 2.0 * ih2 + (path.values[(i + 1) * r] - path.values[i * r]) / h;
  // Sturm sequence: number of eigenvalues below x for constant off-diagonal -ih2.
  auto below = [&](double x) {
    std::size_t c = 0;
    double d = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      d = diag[i] - x - (i ? ih2 * ih2 / d : 0.0);
      if (d == 0.0) d = -1e-300;
      if (d < 0.0) ++c;
    }
    return c;
  };
  double lo = *std::min_element(diag.begin(), diag.end()) - 2.0 * ih2;
  const double hi0 = *std::max_element(diag.begin(), diag.end()) + 2.0 * ih2;
  std::vector<double> out;
  for (std::size_t k = 1; k <= n; ++k) {
    double a = lo, b = hi0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      (below(mid) >= k ? b : a) = mid;
    }
    out.push_back(0.5 * (a + b));
    lo = a;
  }
  return out;
}

/// -2 3^{1/3} (ln L)^{1/3} [lambda + (3/8 ln(L/pi))^{2/3}].
inline double mckean_scaled(double lambda1, double L) {
  return -2.0 * std::cbrt(3.0) * std::cbrt(std::log(L)) * (lambda1 + std::pow(0.375 * std::log(L / std::numbers::pi), 2.0 / 3.0));
}

struct McKeanOptions {
  double h = 1.0 / 256.0;  ///< path step
  double tol = 1e-6;      ///< shooting bracket width
  unsigned threads = 1;
};

struct McKeanLevel {
  double L = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> lambda1;
  std::vector<double> scaled;
  double ks = 0.0;  ///< KS distance of `scaled` to the Gumbel CDF
  double mean = 0.0;
  double standard_error = 0.0;
};

struct McKeanReport {
  std::uint64_t seed = 0;
  McKeanOptions options;
  std::vector<McKeanLevel> levels;
};

inline std::uint64_t mckean_path_seed(std::uint64_t seed, double L, std::size_t path) {
  return rng::key(seed, std::llround(L * 1024.0), std::int64_t(path), 0x3C);
}

/// Ground-state samples for each L and their Kolmogorov-Smirnov distance to the Gumbel law.
/// The scaling degenerates at L = 1 (ln L = 0); such levels are still sampled.
inline McKeanReport mckean_statistics(const std::vector<double>& L_values, std::size_t paths_per_L,
                                      std::uint64_t seed, const McKeanOptions& opt = {}) {
  if (L_values.empty() || paths_per_L < 2) throw InvalidInput("mckean_statistics: need L values and >= 2 paths");
  for (std::size_t i = 0; i < L_values.size(); ++i)
    if (!(L_values[i] > 0.0) || (i && L_values[i] <= L_values[i - 1]))
      throw InvalidInput("mckean_statistics: L values must be positive and increasing");
  McKeanReport rep;
  rep.seed = seed;
  rep.options = opt;
  for (double L : L_values) {
    McKeanLevel lv;
    lv.L = L;
    lv.seeds.resize(paths_per_L);
    lv.lambda1.resize(paths_per_L);
    const auto steps = std::size_t(std::llround(L / opt.h));
    parallel_for(paths_per_L, opt.threads, [&](std::size_t p) {
      lv.seeds[p] = mckean_path_seed(seed, L, p);
      lv.lambda1[p] = eigenvalues_by_shooting(BrownianPath::sample(L, steps, lv.seeds[p]), 1, opt.tol)[0];
    });
    for (double v : lv.lambda1) lv.scaled.push_back(mckean_scaled(v, L));
    lv.ks = stats::ks_distance(lv.scaled, stats::gumbel_cdf);
    lv.mean = stats::mean(lv.lambda1);
    lv.standard_error = stats::standard_error(lv.lambda1);
    rep.levels.push_back(std::move(lv));
  }
  return rep;
}

/// RFC 4180 CSV with header "L,seed,lambda1".
inline std::string mckean_csv(const McKeanReport& rep) {
  std::ostringstream os;
  os.precision(17);
  os << "L,seed,lambda1\r\n";
  for (const auto& lv : rep.levels)
    for (std::size_t i = 0; i < lv.lambda1.size(); ++i) os << lv.L << ',' << lv.seeds[i] << ',' << lv.lambda1[i] << "\r\n";
  return os.str();
}

}  // namespace paraspec::anderson1d

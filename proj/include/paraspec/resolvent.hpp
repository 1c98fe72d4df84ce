#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "paraspec/noise.hpp"
#include "paraspec/transform.hpp"

namespace paraspec {

struct ResolventOptions {
  std::size_t max_iterations = 5000;
  /// Consecutive growing updates (after the first few) that count as divergence.
  std::size_t growth_patience = 4;
};

struct ResolventResult {
  Field f;
  double a = 0.0;
  std::size_t iterations = 0;
  double relative_update = 0.0;
  double residual = 0.0;  ///< ||(H + a) f - g|| / ||g||
};

namespace detail {

inline Field potential_times(const EnhancedNoise& e, const Field& f) {
  Field out = pointwise_product(e.xi_eps, f);
  out.axpy(e.c_eps, f);
  return out;
}

/// ||(H + a) f - g|| / ||g|| computed from its definition.
inline double resolvent_residual(const EnhancedNoise& e, const Field& f, const Field& g, double a) {
  Field r = potential_times(e, f) - laplacian(f);
  r.axpy(a, f);
  r -= g;
  return norm(r) / norm(g);
}

}  // namespace detail

/**
 * Solves (H + a) f = g by the fixed point f <- sigma_a(D)((xi_eps + c_eps) f - g).
 * Throws ConvergenceError when the iteration diverges or stalls; the remedy is
 * a larger a (the iteration is a contraction once a dominates the potential).
 */
inline ResolventResult resolvent_fixed_point(const EnhancedNoise& e, const Field& g, double a, double tol = 1e-10,
                                             const ResolventOptions& opt = {}) {
  g.check_same(e.xi_eps, "resolvent_fixed_point");
  if (!(a > 0.0)) throw InvalidInput("resolvent_fixed_point: a must be positive");
  if (!(tol > 0.0)) throw InvalidInput("resolvent_fixed_point: tolerance must be positive");
  const double gn = norm(g);
  ResolventResult res;
  res.a = a;
  res.f = Field(g.grid(), "G_a g");
  if (gn == 0.0) return res;

  const auto sig = MultiplierSpec::sigma_a(a);
  Field f = -1.0 * apply_multiplier(sig, g);  // first iterate from f = 0
  double prev_update = norm(f);
  const double first_update = prev_update;
  std::size_t growing = 0;
  double best = prev_update / std::max(norm(f), 1e-300);
  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    Field next = apply_multiplier(sig, detail::potential_times(e, f) - g);
    const double upd = norm(next - f);
    const double rel = upd / std::max(norm(next), 1e-300);
    best = std::min(best, rel);
    f = std::move(next);
    res.iterations = it;
    res.relative_update = rel;
    if (rel <= tol) {
      res.residual = detail::resolvent_residual(e, f, g, a);
      if (res.residual <= 10.0 * tol) {
        res.f = std::move(f);
        res.f.set_label("G_a g");
        return res;
      }
    }
    growing = upd > prev_update ? growing + 1 : 0;
    if (!std::isfinite(upd) || (it > 3 && growing >= opt.growth_patience) || upd > 1e6 * first_update)
      throw ConvergenceError("resolvent_fixed_point: iteration diverges at a = " + std::to_string(a) +
                                 "; increase a (contraction threshold not reached)",
                             best);
    prev_update = upd;
  }
  throw ConvergenceError("resolvent_fixed_point: no convergence within " + std::to_string(opt.max_iterations) +
                             " iterations at a = " + std::to_string(a) + "; increase a",
                         best);
}

/// Retries with a doubled until the fixed point converges (at most `max_doublings` times).
inline ResolventResult resolvent_auto(const EnhancedNoise& e, const Field& g, double a0, double tol = 1e-10,
                                      int max_doublings = 30, const ResolventOptions& opt = {}) {
  double a = a0;
  for (int k = 0;; ++k) {
    try {
      return resolvent_fixed_point(e, g, a, tol, opt);
    } catch (const ConvergenceError&) {
      if (k >= max_doublings) throw;
      a *= 2.0;
    }
  }
}

/// Smallest a of the sequence a0 * 2^k at which the fixed point converges on a smooth probe.
inline double contraction_threshold(const EnhancedNoise& e, double a0 = 1.0, double tol = 1e-8) {
  const Field probe = Field::constant(e.grid(), 1.0) + synth_field(2.0, e.grid(), 0xC0FFEEull);
  return resolvent_auto(e, probe, a0, tol).a;
}

struct PowerIterationResult {
  double value = 0.0;
  Field vector;
  std::size_t iterations = 0;
  double change = 0.0;
};

/// Largest eigenvalue of G_a = (H + a)^{-1} by power iteration with Rayleigh quotients.
inline PowerIterationResult resolvent_top_eigenvalue(const EnhancedNoise& e, double a, double tol = 1e-12,
                                                     std::size_t max_iterations = 2000,
                                                     double solve_tol = 1e-12) {
  PowerIterationResult r;
  Field v = Field::constant(e.grid(), 1.0) + 0.1 * synth_field(1.0, e.grid(), 0xB0A7ull);
  v *= 1.0 / norm(v);
  double prev = 0.0;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    Field w = resolvent_fixed_point(e, v, a, solve_tol).f;
    const double rq = inner(w, v);
    r.iterations = it;
    r.change = std::abs(rq - prev);
    r.value = rq;
    v = w * (1.0 / norm(w));
    if (it > 2 && r.change <= tol * std::abs(rq)) break;
    prev = rq;
  }
  r.vector = v;
  return r;
}

}  // namespace paraspec

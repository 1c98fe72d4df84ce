#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "paraspec/config.hpp"
#include "paraspec/noise.hpp"
#include "paraspec/parallel.hpp"
#include "paraspec/paracontrolled.hpp"
#include "paraspec/record.hpp"
#include "paraspec/spectrum.hpp"
#include "paraspec/stats.hpp"

namespace paraspec {

/// Execution knobs that do not affect results.
struct RunContext {
  unsigned threads = 1;
  const std::atomic<bool>* cancel = nullptr;  ///< checked between runs
  std::function<void(const std::string&)> log;

  bool cancelled() const { return cancel && cancel->load(); }
  void note(const std::string& s) const {
    if (log) log(s);
  }
};

/// Rough peak memory of one eigen-solve at N modes per axis (Krylov basis plus work fields).
inline double estimate_memory_mb(int N, std::size_t n_eigen) {
  const double modes = double(N) * N;
  const double basis = std::max<double>(2.0 * n_eigen + 30.0, 60.0) + 2.0 * n_eigen;
  const double work_fields = 40.0;  // complex fields of the operator, dealiasing and enhancement
  return (basis * modes * 8.0 + work_fields * modes * 2.25 * 16.0) / (1024.0 * 1024.0);
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline MollifierSpec mollifier(const std::string& name, double eps) {
  return MollifierSpec{MollifierSpec::parse_kind(name), eps};
}

inline Field noise_field(const TorusGrid& g, std::uint64_t seed, const MollifierSpec& m, bool zero) {
  if (zero) return Field(g, "xi_eps");
  return mollify(sample_white_noise(g, seed), m);
}

inline SpectrumResult solve(const Field& potential, double shift, std::size_t n, const ExperimentConfig& c,
                            double tol) {
  return lowest_eigenpairs_multilevel(potential, shift, n, tol, 1, c.coarsest);
}

/// Runs body(i) for every seed index; per-index output slots keep row order independent of threads.
template <class Body>
std::size_t for_each_seed(const RunContext& ctx, std::size_t n, std::vector<char>& done, Body&& body) {
  done.assign(n, 0);
  parallel_for(n, ctx.threads, [&](std::size_t i) {
    if (ctx.cancelled()) return;
    body(i);
    done[i] = 1;
  });
  return std::size_t(std::count(done.begin(), done.end(), 1));
}

inline void check_budget(int N, std::size_t n_eigen, double budget_mb) {
  const double mb = estimate_memory_mb(N, n_eigen);
  if (mb > budget_mb)
    throw BudgetExceeded("estimated memory " + std::to_string(int(mb)) + " MB for N=" + std::to_string(N) +
                         " exceeds memory_budget_mb=" + std::to_string(int(budget_mb)));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Renormalized convergence

/**
 * For each seed, fixes the raw white noise, mollifies it at each epsilon and
 * mollifier, and records Lambda_k^eps (unrenormalized) and Lambda_k^eps + c_eps.
 * The summary holds the Cauchy gaps d_eps per seed and their seed average.
 */
inline ExperimentRecord renorm_sweep(const ExperimentConfig& c, const RunContext& ctx = {}) {
  validate(c);
  detail::check_budget(c.N, std::size_t(c.n_eigen), c.memory_budget_mb);
  ExperimentRecord rec;
  rec.experiment = "renorm-sweep";
  rec.config_hash = config_hash(c);
  rec.runs.columns = {"seed", "mollifier", "epsilon", "c_eps", "k", "lambda_raw", "lambda_renorm"};
  const TorusGrid g(2, c.L, c.N);
  const std::size_t n = std::size_t(c.n_eigen);

  std::vector<double> eps;
  for (double e : c.epsilons) {
    if (auto w = resolution_warning(g, detail::mollifier("sharp", e))) {
      rec.diagnostics.push_back("epsilon " + format_double(e) + " skipped: " + *w);
      continue;
    }
    eps.push_back(e);
  }
  const std::size_t S = c.seeds.size(), M = c.mollifiers.size(), E = eps.size();
  // renorm[s][m][e][k]
  std::vector<std::vector<std::vector<std::vector<double>>>> renorm(
      S, std::vector<std::vector<std::vector<double>>>(M, std::vector<std::vector<double>>(E)));
  std::vector<double> cvals(M * E), wall(S);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t e = 0; e < E; ++e) cvals[m * E + e] = renorm_constant(g, detail::mollifier(c.mollifiers[m], eps[e]));

  std::vector<char> done;
  detail::for_each_seed(ctx, S, done, [&](std::size_t s) {
    const auto t0 = detail::Clock::now();
    const auto raw = c.zero_noise ? NoiseRealization{c.seeds[s], Field(g)} : sample_white_noise(g, c.seeds[s]);
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t e = 0; e < E; ++e) {
        const auto mol = detail::mollifier(c.mollifiers[m], eps[e]);
        const double ce = cvals[m * E + e];
        renorm[s][m][e] = detail::solve(mollify(raw, mol), ce, n, c, c.tol).eigenvalues;
      }
    wall[s] = detail::seconds_since(t0);
    ctx.note("renorm-sweep: seed " + std::to_string(c.seeds[s]) + " done");
  });

  auto& sum = rec.summary;
  sum["epsilons"] = eps;
  sum["mollifiers"] = c.mollifiers;
  sum["wall_time_s"] = wall;
  nlohmann::json per = nlohmann::json::array();
  std::size_t monotone_seeds = 0, seeds_done = 0;
  for (std::size_t s = 0; s < S; ++s) {
    if (!done[s]) continue;
    ++seeds_done;
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t e = 0; e < E; ++e)
        for (std::size_t k = 0; k < n; ++k) {
          const double R = renorm[s][m][e][k], ce = cvals[m * E + e];
          rec.runs.add({std::int64_t(c.seeds[s]), c.mollifiers[m], eps[e], ce, std::int64_t(k + 1), R - ce, R});
        }
  }
  // Cauchy gaps, per seed and seed-averaged.
  nlohmann::json gaps = nlohmann::json::object();
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> avg(E > 0 ? E - 1 : 0, 0.0);
      std::size_t monotone = 0;
      for (std::size_t s = 0; s < S; ++s) {
        if (!done[s]) continue;
        std::vector<double> d, drift, dc;
        for (std::size_t e = 0; e + 1 < E; ++e) {
          d.push_back(std::abs(renorm[s][m][e][k] - renorm[s][m][e + 1][k]));
          const double raw0 = renorm[s][m][e][k] - cvals[m * E + e], raw1 = renorm[s][m][e + 1][k] - cvals[m * E + e + 1];
          drift.push_back(raw1 - raw0);
          dc.push_back(-(cvals[m * E + e + 1] - cvals[m * E + e]));
          avg[e] += d.back() / double(seeds_done);
        }
        bool mono = true;
        for (std::size_t i = 1; i < d.size(); ++i) mono = mono && d[i] < d[i - 1];
        monotone += mono;
        per.push_back({{"seed", c.seeds[s]}, {"mollifier", c.mollifiers[m]}, {"k", k + 1}, {"d_eps", d},
                       {"monotone", mono}, {"raw_drift", drift}, {"minus_c_eps_change", dc}});
      }
      bool avg_mono = true;
      double ratio = 0.0;
      for (std::size_t i = 1; i < avg.size(); ++i) {
        avg_mono = avg_mono && avg[i] < avg[i - 1];
        ratio += avg[i - 1] / avg[i] / double(avg.size() - 1);
      }
      if (k == 0 && m == 0) monotone_seeds = monotone;
      gaps[c.mollifiers[m] + "/k" + std::to_string(k + 1)] = {
          {"mean_d_eps", avg}, {"mean_monotone", avg_mono}, {"mean_gap_ratio", ratio}, {"seeds_monotone", monotone}};
    }
  }
  sum["per_seed"] = per;
  sum["gaps"] = gaps;
  sum["seeds_monotone_first"] = monotone_seeds;
  // Mollifier universality at the smallest common epsilon.
  if (M >= 2 && E >= 2) {
    std::size_t agree = 0;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t s = 0; s < S; ++s) {
      if (!done[s]) continue;
      const double a = renorm[s][0][E - 1][0], b = renorm[s][1][E - 1][0];
      const double da = std::abs(renorm[s][0][E - 2][0] - a), db = std::abs(renorm[s][1][E - 2][0] - b);
      const bool ok = std::abs(a - b) < std::max(da, db);
      agree += ok;
      rows.push_back({{"seed", c.seeds[s]}, {"difference", std::abs(a - b)}, {"gap", std::max(da, db)}, {"agree", ok}});
    }
    sum["universality"] = {{"mollifiers", {c.mollifiers[0], c.mollifiers[1]}},
                           {"epsilon", eps.back()},
                           {"seeds_agree", agree},
                           {"per_seed", rows}};
  }
  rec.complete = seeds_done == S;
  return rec;
}

// ---------------------------------------------------------------------------
// Lipschitz continuity in the enhanced noise

enum class Perturbation { independent_noise, zero_mode };

/**
 * Perturbs xi_eps by delta xi' (xi' an independent mollified noise, or the unit
 * zero mode) at a fixed constant, and records |Lambda_k(Xi + delta Xi') - Lambda_k(Xi)|
 * divided by ||delta Xi'|| = delta (||xi'||_{C^alpha} + ||Xi'_2||_{C^{2alpha+2}}).
 */
inline ExperimentRecord lipschitz_probe(const ExperimentConfig& c, const RunContext& ctx = {},
                                        Perturbation kind = Perturbation::independent_noise) {
  validate(c);
  detail::check_budget(c.N, std::size_t(c.n_eigen), c.memory_budget_mb);
  ExperimentRecord rec;
  rec.experiment = "lipschitz";
  rec.config_hash = config_hash(c);
  rec.runs.columns = {"seed", "delta", "k", "lambda_base", "lambda_perturbed", "difference", "distance", "ratio"};
  const TorusGrid g(2, c.L, c.N);
  const auto mol = detail::mollifier(c.mollifiers.front(), c.epsilon);
  if (auto w = resolution_warning(g, mol)) rec.diagnostics.push_back(*w);
  const DyadicPartition P;
  const std::size_t n = std::size_t(c.n_eigen), S = c.seeds.size(), D = c.deltas.size();
  std::vector<std::vector<std::vector<Cell>>> rows(S);
  std::vector<char> done;
  detail::for_each_seed(ctx, S, done, [&](std::size_t s) {
    const auto base = enhance(sample_white_noise(g, c.seeds[s]), mol, P);
    const Field xi_p = kind == Perturbation::zero_mode
                           ? Field::constant(g, 1.0 / std::sqrt(g.volume()))
                           : mollify(sample_white_noise(g, rng::key(c.seeds[s], 0x11B5)), mol);
    // Enhancement of the perturbation direction: Xi'_2 = xi' o sigma(D) xi' + c' (c' = c_eps for a
    // noise copy, 0 for the deterministic zero mode); ||delta Xi'|| = delta ||Xi'||.
    const Field xi2_p = resonant_enhancement(xi_p, kind == Perturbation::zero_mode ? 0.0 : base.c_eps, P);
    const double norm_p = holder_norm(xi_p, c.alpha, P) + holder_norm(xi2_p, 2.0 * c.alpha + 2.0, P);
    const HamiltonianOp op0(base.xi_eps, base.c_eps);
    const auto s0 = lowest_eigenpairs(op0, n, c.tol);
    for (std::size_t d = 0; d < D; ++d) {
      const double delta = c.deltas[d];
      const Field xi_d = base.xi_eps + delta * xi_p;
      const double dist = delta * norm_p;
      const auto sd = lowest_eigenpairs(HamiltonianOp(xi_d, base.c_eps), n, c.tol, 1, 0, &s0.eigenvectors[0]);
      for (std::size_t k = 0; k < n; ++k) {
        const double diff = std::abs(sd.eigenvalues[k] - s0.eigenvalues[k]);
        rows[s].push_back({std::int64_t(c.seeds[s]), delta, std::int64_t(k + 1), s0.eigenvalues[k], sd.eigenvalues[k],
                           diff, dist, diff / dist});
      }
    }
  });
  std::vector<std::vector<double>> max_ratio(n, std::vector<double>(D, 0.0));
  std::size_t seeds_done = 0;
  for (std::size_t s = 0; s < S; ++s) {
    if (!done[s]) continue;
    ++seeds_done;
    for (auto& r : rows[s]) {
      const auto d = std::size_t(std::find(c.deltas.begin(), c.deltas.end(), std::get<double>(r[1])) - c.deltas.begin());
      const auto k = std::size_t(std::get<std::int64_t>(r[2]) - 1);
      max_ratio[k][d] = std::max(max_ratio[k][d], std::get<double>(r[7]));
      rec.runs.add(std::move(r));
    }
  }
  bool bounded = true;
  for (std::size_t k = 0; k < n; ++k) bounded = bounded && max_ratio[k][D - 1] <= 3.0 * max_ratio[k][0];
  rec.summary["deltas"] = c.deltas;
  rec.summary["max_ratio_per_k"] = max_ratio;
  rec.summary["bounded"] = bounded;
  rec.summary["perturbation"] = kind == Perturbation::zero_mode ? "zero_mode" : "independent_noise";
  rec.complete = seeds_done == S;
  return rec;
}

// ---------------------------------------------------------------------------
// Scaling identity

/// (1 - r^2)/L^2 sum over the lattice of theta^2 / ((1 + |w|^2)(1 + r^2 |w|^2)) on the grid's modes.
inline double scaling_constant_on_grid(const TorusGrid& g, double r, const MollifierSpec& m) {
  stats::CompensatedSum s;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_nyquist(i)) continue;
    const double th = m.theta(m.epsilon * g.wavenumber(i));
    const double w2 = g.frequency_sq(i);
    s.add(th * th / ((1.0 + w2) * (1.0 + r * r * w2)));
  }
  return (1.0 - r * r) / (g.side_length() * g.side_length()) * s.value();
}

/**
 * m_{r,L} = (1 - r^2)/L^2 sum_{n in Z^2} 1 / ((1 + |w_n|^2)(1 + r^2 |w_n|^2)), w_n = 2 pi n / L.
 * Direct sum over |n_i| <= K plus the leading-order tail outside the square,
 * L^4 / (16 pi^4 r^2) (pi/2 + 1) / (K + 1/2)^2.
 */
inline double scaling_constant(double r, double L, int K = 2000) {
  if (!(r > 0.0 && r < 1.0) || !(L > 0.0) || K < 1) throw InvalidInput("scaling_constant: need 0 < r < 1, L > 0");
  const double u = 2.0 * std::numbers::pi / L;
  stats::CompensatedSum s;
  for (int a = -K; a <= K; ++a)
    for (int b = -K; b <= K; ++b) {
      const double w2 = u * u * (double(a) * a + double(b) * b);
      s.add(1.0 / ((1.0 + w2) * (1.0 + r * r * w2)));
    }
  const double pi = std::numbers::pi;
  const double tail = std::pow(L, 4) / (16.0 * std::pow(pi, 4) * r * r) * (pi / 2.0 + 1.0) / std::pow(K + 0.5, 2);
  return (1.0 - r * r) / (L * L) * (s.value() + tail);
}

/// Smooth deterministic potential used by the scaling check.
inline Field scaling_potential(const TorusGrid& g, const std::string& kind) {
  if (kind == "zero") return Field(g, "V");
  const int N = g.modes_per_dim();
  const double L = g.side_length(), pi = std::numbers::pi;
  std::vector<double> v(g.size());
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const double x = L * i / N, y = L * j / N;
      double val = 3.0 * std::cos(2.0 * pi * (2.0 * x + y) / L) + 1.5 * std::sin(2.0 * pi * (x - 3.0 * y) / L);
      if (kind == "smooth") val += 2.0 * std::exp(std::cos(2.0 * pi * x / L) + std::sin(2.0 * pi * y / L)) - 2.5;
      v[std::size_t(i) * N + j] = val;
    }
  return from_physical(g, v, "V");
}

/**
 * (i) Deterministic: Lambda_k(V on T_L) against r^{-2} Lambda_k(r^2 V(r .) on T_{L/r}); the scaled
 * potential is built from physical samples. (ii) m_{r,L} and the finite-epsilon constant identity
 * c_eps - c~_{eps/r} = m_eps. (iii) In law: sample moments of Lambda_k^eps + c_eps on T_L against
 * r^{-2}(Lambda_k(r xi~ + r^2 c~) on T_{L/r}) + m_eps with independent seeds.
 */
inline ExperimentRecord scaling_identity_check(const ExperimentConfig& c, const RunContext& ctx = {}) {
  validate(c);
  detail::check_budget(c.N, std::size_t(c.n_eigen), c.memory_budget_mb);
  ExperimentRecord rec;
  rec.experiment = "scaling";
  rec.config_hash = config_hash(c);
  rec.runs.columns = {"kind", "seed", "k", "lhs", "rhs", "difference"};
  const double r = c.r;
  const TorusGrid g(2, c.L, c.N), gs(2, c.L / r, c.N);
  const std::size_t n = std::size_t(c.n_eigen);

  // (i)
  const Field V = scaling_potential(g, c.potential);
  std::vector<double> samples = to_physical(V);
  for (double& x : samples) x *= r * r;
  const Field W = from_physical(gs, samples, "r^2 V(r.)");
  const auto lhs = lowest_eigenpairs(HamiltonianOp(V, 0.0), n, c.tol);
  const auto rhs = lowest_eigenpairs(HamiltonianOp(W, 0.0), n, c.tol);
  double det_max = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = lhs.eigenvalues[k], b = rhs.eigenvalues[k] / (r * r);
    det_max = std::max(det_max, std::abs(a - b));
    rec.runs.add({std::string("deterministic"), std::int64_t(0), std::int64_t(k + 1), a, b, a - b});
  }
  rec.summary["deterministic_max_difference"] = det_max;
  rec.summary["potential"] = c.potential;

  // (ii)
  const auto mol = detail::mollifier(c.mollifiers.front(), c.epsilon);
  const auto mol_s = detail::mollifier(c.mollifiers.front(), c.epsilon / r);
  const double m_rl = scaling_constant(r, c.L);
  const double m_eps = scaling_constant_on_grid(g, r, mol);
  const double c_eps = renorm_constant(g, mol), c_tilde = renorm_constant(gs, mol_s);
  rec.runs.add({std::string("m_rL"), std::int64_t(0), std::int64_t(0), m_rl, m_eps, m_rl - m_eps});
  rec.runs.add({std::string("constant_identity"), std::int64_t(0), std::int64_t(0), c_eps - c_tilde, m_eps,
                c_eps - c_tilde - m_eps});
  rec.summary["m_rL"] = m_rl;
  rec.summary["m_eps"] = m_eps;
  rec.summary["constant_identity_difference"] = c_eps - c_tilde - m_eps;

  // (iii)
  if (auto w = resolution_warning(g, mol)) rec.diagnostics.push_back(*w);
  const std::size_t S = c.seeds.size();
  std::vector<std::vector<double>> L_side(S), R_side(S);
  std::vector<char> done;
  detail::for_each_seed(ctx, S, done, [&](std::size_t s) {
    const Field xi = mollify(sample_white_noise(g, c.seeds[s]), mol);
    L_side[s] = detail::solve(xi, c_eps, n, c, c.tol).eigenvalues;
    const Field xt = r * mollify(sample_white_noise(gs, rng::key(c.seeds[s], 0x5CA1)), mol_s);
    auto ev = detail::solve(xt, r * r * c_tilde, n, c, c.tol).eigenvalues;
    for (double& v : ev) v = v / (r * r) + m_eps;
    R_side[s] = ev;
  });
  nlohmann::json moments = nlohmann::json::array();
  std::size_t seeds_done = 0;
  for (std::size_t s = 0; s < S; ++s) {
    if (!done[s]) continue;
    ++seeds_done;
    for (std::size_t k = 0; k < n; ++k)
      rec.runs.add({std::string("in_law"), std::int64_t(c.seeds[s]), std::int64_t(k + 1), L_side[s][k], R_side[s][k],
                    L_side[s][k] - R_side[s][k]});
  }
  if (seeds_done >= 2) {
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> a, b;
      for (std::size_t s = 0; s < S; ++s)
        if (done[s]) {
          a.push_back(L_side[s][k]);
          b.push_back(R_side[s][k]);
        }
      const double ma = stats::mean(a), mb = stats::mean(b), va = stats::variance(a), vb = stats::variance(b);
      const double z_mean = std::abs(ma - mb) / std::sqrt(va / a.size() + vb / b.size());
      const double z_var = std::abs(va - vb) / std::sqrt(2.0 * (va * va + vb * vb) / double(a.size() - 1));
      moments.push_back({{"k", k + 1}, {"mean_lhs", ma}, {"mean_rhs", mb}, {"var_lhs", va}, {"var_rhs", vb},
                         {"z_mean", z_mean}, {"z_var", z_var}, {"consistent", z_mean <= 3.0 && z_var <= 3.0}});
    }
  }
  rec.summary["in_law"] = moments;
  rec.complete = seeds_done == S;
  return rec;
}

// ---------------------------------------------------------------------------
// Growth in log L

struct TrendTest {
  double slope = 0.0;
  double slope_se = 0.0;
  bool increasing = false;  ///< slope > 2 standard errors
};

/// Weighted fit of y_i (standard errors se_i) against log L; increasing when the slope exceeds 2 SE.
inline TrendTest trend_test(const std::vector<double>& L, const std::vector<double>& y, const std::vector<double>& se) {
  std::vector<double> x, w;
  for (std::size_t i = 0; i < L.size(); ++i) {
    x.push_back(std::log(L[i]));
    w.push_back(1.0 / std::max(se[i] * se[i], 1e-300));
  }
  const auto f = stats::linear_fit(x, y, w);
  double sw = 0.0, swx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    swx += w[i] * x[i];
  }
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sxx += w[i] * std::pow(x[i] - swx / sw, 2);
  TrendTest t;
  t.slope = f.slope;
  t.slope_se = 1.0 / std::sqrt(sxx);
  t.increasing = t.slope > 2.0 * t.slope_se;
  return t;
}

/**
 * Per L (fixed modes per unit length and fixed epsilon): E|Lambda_1|/log L,
 * ||xi_eps||_{C^alpha}/sqrt(log L) and ||Xi_2||_{C^{2alpha+2}}/log L over seeds.
 */
inline ExperimentRecord growth_study(const ExperimentConfig& c, const RunContext& ctx = {}) {
  validate(c);
  for (double L : c.L_values) {
    if (!(L > 1.0)) throw ConfigError("L_values", "growth needs L > 1 (log L in the denominator)");
    const double Nd = L * c.n_per_unit;
    if (std::abs(Nd - std::round(Nd)) > 1e-9 || std::llround(Nd) % 2)
      throw ConfigError("n_per_unit", "L * n_per_unit must be an even integer for every L");
    detail::check_budget(int(std::llround(Nd)), 1, c.memory_budget_mb);
  }
  ExperimentRecord rec;
  rec.experiment = "growth";
  rec.config_hash = config_hash(c);
  rec.runs.columns = {"L", "seed", "lambda1", "abs_lambda1_over_log_L", "xi_norm_over_sqrt_log_L",
                      "xi2_norm_over_log_L"};
  const DyadicPartition P;
  const std::size_t S = c.seeds.size();
  std::vector<double> Ls, y[3], se[3];
  bool all_done = true;
  for (double L : c.L_values) {
    const TorusGrid g(2, L, int(std::llround(L * c.n_per_unit)));
    const auto mol = detail::mollifier(c.mollifiers.front(), c.epsilon);
    if (auto w = resolution_warning(g, mol)) {
      rec.diagnostics.push_back("L " + format_double(L) + " skipped: " + *w);
      continue;
    }
    const double ce = renorm_constant(g, mol), lg = std::log(L);
    std::vector<std::array<double, 4>> out(S);
    std::vector<char> done;
    detail::for_each_seed(ctx, S, done, [&](std::size_t s) {
      const Field xi = c.zero_noise ? Field(g) : mollify(sample_white_noise(g, c.seeds[s]), mol);
      const double l1 = detail::solve(xi, c.zero_noise ? 0.0 : ce, 1, c, c.tol).eigenvalues[0];
      const Field xi2 = resonant_enhancement(xi, c.zero_noise ? 0.0 : ce, P);
      out[s] = {l1, std::abs(l1) / lg, holder_norm(xi, c.alpha, P) / std::sqrt(lg),
                holder_norm(xi2, 2.0 * c.alpha + 2.0, P) / lg};
    });
    std::vector<double> cols[3];
    for (std::size_t s = 0; s < S; ++s) {
      if (!done[s]) {
        all_done = false;
        continue;
      }
      rec.runs.add({L, std::int64_t(c.seeds[s]), out[s][0], out[s][1], out[s][2], out[s][3]});
      for (int q = 0; q < 3; ++q) cols[q].push_back(out[s][q + 1]);
    }
    if (cols[0].size() < 2) continue;
    Ls.push_back(L);
    for (int q = 0; q < 3; ++q) {
      y[q].push_back(stats::mean(cols[q]));
      se[q].push_back(stats::standard_error(cols[q]));
    }
    ctx.note("growth: L = " + format_double(L) + " done");
  }
  const char* names[3] = {"abs_lambda1_over_log_L", "xi_norm_over_sqrt_log_L", "xi2_norm_over_log_L"};
  rec.summary["L"] = Ls;
  for (int q = 0; q < 3; ++q) {
    nlohmann::json j = {{"mean", y[q]}, {"standard_error", se[q]}};
    if (Ls.size() >= 2) {
      const bool degenerate = std::all_of(se[q].begin(), se[q].end(), [](double v) { return v == 0.0; });
      if (degenerate) {
        j["bounded"] = std::adjacent_find(y[q].begin(), y[q].end(), std::less<>()) == y[q].end();
      } else {
        const auto t = trend_test(Ls, y[q], se[q]);
        j["slope"] = t.slope;
        j["slope_se"] = t.slope_se;
        j["bounded"] = !t.increasing;
      }
    }
    rec.summary[names[q]] = j;
  }
  rec.complete = all_done;
  return rec;
}

// ---------------------------------------------------------------------------
// Lower tail of Lambda_1

struct TailFit {
  std::vector<double> x;             ///< thresholds
  std::vector<double> log_cdf;       ///< log P(X <= x)
  std::vector<double> fit_value;     ///< intercept + slope x
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;                   ///< weighted R^2 of the linear fit
  double curvature = 0.0;            ///< quadratic coefficient of a weighted quadratic fit
  double curvature_se = 0.0;
  bool curved = false;               ///< |curvature| > 3 SE: not exponential
  double envelope_low = 0.0;         ///< intercept shifts bracketing the data: e^{b_lo + s x} <= P <= e^{b_hi + s x}
  double envelope_high = 0.0;
  double p_min = 0.0, p_max = 0.0;   ///< window actually used
  std::vector<std::string> notes;
};

/**
 * Weighted fit of log P(X <= x) on thresholds spaced evenly between the
 * p_min and p_max sample quantiles. Weights n F / (1 - F) are inverse
 * binomial variances of log F. p_min is raised to 10/n when the lower
 * window end would hold fewer than ten samples.
 */
inline TailFit tail_fit(std::vector<double> samples, double p_min, double p_max, int points) {
  if (samples.size() < 20) throw InvalidInput("tail_fit: need at least 20 samples");
  if (points < 3) throw InvalidInput("tail_fit: need at least 3 thresholds");
  TailFit t;
  const double n = double(samples.size());
  if (n * p_min < 10.0) {
    t.notes.push_back("tail undersampled at p_min = " + format_double(p_min) + "; window widened to " +
                      format_double(10.0 / n));
    p_min = 10.0 / n;
  }
  if (!(p_min < p_max)) throw InvalidInput("tail_fit: too few samples for the requested tail window");
  t.p_min = p_min;
  t.p_max = p_max;
  std::sort(samples.begin(), samples.end());
  auto quantile = [&](double p) { return samples[std::min<std::size_t>(samples.size() - 1, std::size_t(p * n))]; };
  const double x0 = quantile(p_min), x1 = quantile(p_max);
  if (!(x1 > x0)) throw InvalidInput("tail_fit: degenerate tail window");
  for (int i = 0; i < points; ++i) t.x.push_back(x0 + (x1 - x0) * i / (points - 1));
  const auto F = stats::empirical_cdf(samples, t.x);
  std::vector<double> w;
  for (double f : F) {
    t.log_cdf.push_back(std::log(f));
    w.push_back(n * f / (1.0 - f));
  }
  const auto lf = stats::linear_fit(t.x, t.log_cdf, w);
  t.slope = lf.slope;
  t.intercept = lf.intercept;
  t.r2 = lf.r2;
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < t.x.size(); ++i) {
    t.fit_value.push_back(t.intercept + t.slope * t.x[i]);
    const double res = t.log_cdf[i] - t.fit_value.back();
    lo = std::min(lo, res);
    hi = std::max(hi, res);
  }
  t.envelope_low = t.intercept + lo;
  t.envelope_high = t.intercept + hi;
  // Quadratic fit for curvature by generalized least squares. The empirical CDF is cumulative, so
  // its values at different thresholds are correlated: Cov(log F_i, log F_j) = (1 - F_j)/(n F_j), i <= j.
  // Thresholds with equal F carry no new information and would make the covariance singular.
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < F.size(); ++i)
    if (keep.empty() || F[i] > F[keep.back()]) keep.push_back(i);
  const std::size_t m = keep.size();
  if (m < 4) throw InvalidInput("tail_fit: too few distinct thresholds for a curvature test");
  const double xm = 0.5 * (x0 + x1);
  Eigen::MatrixXd A(m, 3), Sigma(m, m);
  Eigen::VectorXd b(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double u = t.x[keep[i]] - xm;
    A(i, 0) = 1.0;
    A(i, 1) = u;
    A(i, 2) = u * u;
    b(i) = t.log_cdf[keep[i]];
    for (std::size_t j = 0; j < m; ++j) {
      const double Fj = F[keep[std::max(i, j)]];
      Sigma(i, j) = (1.0 - Fj) / (n * Fj);
    }
  }
  const Eigen::LDLT<Eigen::MatrixXd> chol(Sigma);
  const Eigen::MatrixXd SA = chol.solve(A);
  const Eigen::Matrix3d info = A.transpose() * SA;
  const Eigen::Vector3d coef = info.ldlt().solve(SA.transpose() * b);
  const Eigen::Matrix3d cov = info.inverse();
  t.curvature = coef(2);
  t.curvature_se = std::sqrt(cov(2, 2));
  t.curved = std::abs(t.curvature) > 3.0 * t.curvature_se;
  return t;
}

inline nlohmann::json to_json(const TailFit& t) {
  return {{"slope", t.slope},
          {"intercept", t.intercept},
          {"r2", t.r2},
          {"curvature", t.curvature},
          {"curvature_se", t.curvature_se},
          {"non_exponential", t.curved},
          {"envelope_low_intercept", t.envelope_low},
          {"envelope_high_intercept", t.envelope_high},
          {"p_min", t.p_min},
          {"p_max", t.p_max},
          {"thresholds", t.x},
          {"log_cdf", t.log_cdf},
          {"notes", t.notes}};
}

/// Standard normal draws for the negative control of the tail fit.
inline std::vector<double> gaussian_control_samples(std::size_t n, std::uint64_t seed) {
  rng::Stream s(rng::key(seed, 0x6A55));
  std::vector<double> x(n);
  for (auto& v : x) v = s.normal();
  return x;
}

/// Lambda_1 samples at L, N, epsilon over the seed list, then the lower-tail fit.
inline ExperimentRecord tail_study(const ExperimentConfig& c, const RunContext& ctx = {}) {
  validate(c);
  detail::check_budget(c.N, 1, c.memory_budget_mb);
  ExperimentRecord rec;
  rec.experiment = "tails";
  rec.config_hash = config_hash(c);
  rec.runs.columns = {"seed", "lambda1"};
  const TorusGrid g(2, c.L, c.N);
  const auto mol = detail::mollifier(c.mollifiers.front(), c.epsilon);
  if (auto w = resolution_warning(g, mol)) rec.diagnostics.push_back(*w);
  const double ce = renorm_constant(g, mol);
  const std::size_t S = c.seeds.size();
  std::vector<double> l1(S);
  std::vector<char> done;
  const auto t0 = detail::Clock::now();
  detail::for_each_seed(ctx, S, done, [&](std::size_t s) {
    const Field xi = detail::noise_field(g, c.seeds[s], mol, c.zero_noise);
    l1[s] = detail::solve(xi, c.zero_noise ? 0.0 : ce, 1, c, c.tol).eigenvalues[0];
    if ((s + 1) % 500 == 0) ctx.note("tails: " + std::to_string(s + 1) + " seeds");
  });
  std::vector<double> samples;
  for (std::size_t s = 0; s < S; ++s)
    if (done[s]) {
      rec.runs.add({std::int64_t(c.seeds[s]), l1[s]});
      samples.push_back(l1[s]);
    }
  rec.summary["c_eps"] = ce;
  rec.summary["samples"] = samples.size();
  rec.summary["wall_time_s"] = detail::seconds_since(t0);
  try {
    const auto fit = tail_fit(samples, c.tail_p_min, c.tail_p_max, c.tail_points);
    rec.summary["fit"] = to_json(fit);
    for (const auto& s : fit.notes) rec.diagnostics.push_back(s);
  } catch (const InvalidInput& e) {
    rec.diagnostics.push_back(std::string("tail fit not possible: ") + e.what());
  }
  rec.complete = samples.size() == S;
  return rec;
}

// ---------------------------------------------------------------------------
// Localization

/// Inverse participation ratio int |f|^4 / (int |f|^2)^2 from physical samples.
inline double inverse_participation_ratio(const Field& f) {
  const auto v = to_physical(f);
  stats::CompensatedSum s2, s4;
  for (double x : v) {
    s2.add(x * x);
    s4.add(x * x * x * x);
  }
  const double h2 = f.grid().cell_volume();
  if (!(s2.value() > 0.0)) throw InvalidInput("inverse_participation_ratio: zero field");
  return s4.value() / (s2.value() * s2.value() * h2);
}

/// Ground-state IPR per seed for each L at fixed modes per unit length.
inline ExperimentRecord localization_diagnostic(const ExperimentConfig& c, const RunContext& ctx = {}) {
  validate(c);
  for (double L : c.L_values) {
    const double Nd = L * c.n_per_unit;
    if (std::abs(Nd - std::round(Nd)) > 1e-9 || std::llround(Nd) % 2 || Nd < 8)
      throw ConfigError("n_per_unit", "L * n_per_unit must be an even integer >= 8 for every L");
    detail::check_budget(int(std::llround(Nd)), 1, c.memory_budget_mb);
  }
  ExperimentRecord rec;
  rec.experiment = "localization";
  rec.config_hash = config_hash(c);
  rec.runs.columns = {"L", "seed", "lambda1", "ipr"};
  const std::size_t S = c.seeds.size();
  std::vector<double> medians;
  bool all_done = true;
  for (double L : c.L_values) {
    const TorusGrid g(2, L, int(std::llround(L * c.n_per_unit)));
    const auto mol = detail::mollifier(c.mollifiers.front(), c.epsilon);
    if (auto w = resolution_warning(g, mol)) rec.diagnostics.push_back("L " + format_double(L) + ": " + *w);
    const double ce = c.zero_noise ? 0.0 : renorm_constant(g, mol);
    std::vector<double> lam(S), ipr(S);
    std::optional<Field> first;
    std::vector<char> done;
    detail::for_each_seed(ctx, S, done, [&](std::size_t s) {
      const Field xi = detail::noise_field(g, c.seeds[s], mol, c.zero_noise);
      auto sp = detail::solve(xi, ce, 1, c, c.tol);
      lam[s] = sp.eigenvalues[0];
      ipr[s] = inverse_participation_ratio(sp.eigenvectors[0]);
      if (s == 0) first = sp.eigenvectors[0];
    });
    std::vector<double> vals;
    for (std::size_t s = 0; s < S; ++s) {
      if (!done[s]) {
        all_done = false;
        continue;
      }
      rec.runs.add({L, std::int64_t(c.seeds[s]), lam[s], ipr[s]});
      vals.push_back(ipr[s]);
    }
    if (first) rec.fields["ground_state_L" + format_double(L)] = *first;
    medians.push_back(vals.empty() ? std::nan("") : stats::median(vals));
  }
  rec.summary["L"] = c.L_values;
  rec.summary["median_ipr"] = medians;
  if (medians.size() >= 2) rec.summary["localizes"] = medians.back() > medians.front();
  rec.complete = all_done;
  return rec;
}

// ---------------------------------------------------------------------------
// Strong paracontrolled regularity of the ground state

/**
 * For each seed, the ground state of -Laplacian + xi + c at N and 2N modes (same
 * white noise, epsilon from the config, sharp cutoff by default) is split as
 * f = f < u + B(f, Xi) + f_flat; records H^2 estimates of f and f_flat.
 */
inline ExperimentRecord paracontrolled_regularity(const ExperimentConfig& c, const RunContext& ctx = {}) {
  validate(c);
  detail::check_budget(2 * c.N, 1, c.memory_budget_mb);
  ExperimentRecord rec;
  rec.experiment = "paracheck";
  rec.config_hash = config_hash(c);
  rec.runs.columns = {"seed", "N", "lambda1", "f_h2", "f_sharp_h2", "f_flat_h2", "f_flat_h_gamma"};
  const DyadicPartition P;
  const auto mol = detail::mollifier(c.mollifiers.front(), c.epsilon);
  const std::size_t S = c.seeds.size();
  std::vector<std::array<std::array<double, 5>, 2>> out(S);
  std::vector<char> done;
  detail::for_each_seed(ctx, S, done, [&](std::size_t s) {
    for (int lv = 0; lv < 2; ++lv) {
      const TorusGrid g(2, c.L, c.N << lv);
      const auto e = enhance(sample_white_noise(g, c.seeds[s]), mol, P);
      const auto sp = detail::solve(e.xi_eps, e.c_eps, 1, c, c.tol);
      const auto d = paracontrolled_split(e, sp.eigenvectors[0], P);
      out[s][lv] = {sp.eigenvalues[0], d.norms_f.h2, d.norms_sharp.h2, d.norms_flat.h2, d.norms_flat.h_gamma};
    }
  });
  nlohmann::json per = nlohmann::json::array();
  std::size_t stable = 0, seeds_done = 0;
  for (std::size_t s = 0; s < S; ++s) {
    if (!done[s]) continue;
    ++seeds_done;
    for (int lv = 0; lv < 2; ++lv) {
      const auto& o = out[s][lv];
      rec.runs.add({std::int64_t(c.seeds[s]), std::int64_t(c.N << lv), o[0], o[1], o[2], o[3], o[4]});
    }
    const double flat_ratio = out[s][1][3] / out[s][0][3], raw_ratio = out[s][1][1] / out[s][0][1];
    const bool ok = flat_ratio <= 2.0 && raw_ratio >= 1.5;
    stable += ok;
    per.push_back({{"seed", c.seeds[s]}, {"flat_h2_ratio", flat_ratio}, {"raw_h2_ratio", raw_ratio}, {"pass", ok}});
  }
  rec.summary["per_seed"] = per;
  rec.summary["seeds_pass"] = stable;
  rec.complete = seeds_done == S;
  return rec;
}

// ---------------------------------------------------------------------------
// Plot data

struct PlotEmission {
  std::vector<std::string> files;
  bool partial = false;  ///< the record was incomplete
};

/// Long-format table for one plot kind; throws on an empty record or an unknown kind.
inline Table plot_table(const ExperimentRecord& rec, const std::string& kind) {
  if (rec.runs.empty() && rec.fields.empty()) throw InvalidInput("emit_plotdata: empty record");
  Table t;
  if (kind == "convergence") {
    t.columns = {"x", "y", "group"};
    for (std::size_t i = 0; i < rec.runs.rows.size(); ++i)
      t.add({rec.runs.number(i, "epsilon"), rec.runs.number(i, "lambda_renorm"),
             "seed=" + std::to_string(std::int64_t(rec.runs.number(i, "seed"))) + ";mollifier=" +
                 rec.runs.text(i, "mollifier") + ";k=" + std::to_string(std::int64_t(rec.runs.number(i, "k")))});
  } else if (kind == "tail") {
    if (!rec.summary.contains("fit")) throw InvalidInput("emit_plotdata: record has no tail fit");
    const auto& f = rec.summary["fit"];
    t.columns = {"x", "log_survival", "fit_value"};
    const auto x = f["thresholds"].get<std::vector<double>>(), y = f["log_cdf"].get<std::vector<double>>();
    const double a = f["intercept"].get<double>(), s = f["slope"].get<double>();
    for (std::size_t i = 0; i < x.size(); ++i) t.add({x[i], y[i], a + s * x[i]});
  } else if (kind == "ipr") {
    t.columns = {"x", "y", "group"};
    for (std::size_t i = 0; i < rec.runs.rows.size(); ++i)
      t.add({rec.runs.number(i, "L"), rec.runs.number(i, "ipr"),
             "seed=" + std::to_string(std::int64_t(rec.runs.number(i, "seed")))});
  } else if (kind == "growth") {
    t.columns = {"x", "y", "group"};
    for (std::size_t i = 0; i < rec.runs.rows.size(); ++i)
      for (const char* q : {"abs_lambda1_over_log_L", "xi_norm_over_sqrt_log_L", "xi2_norm_over_log_L"})
        t.add({rec.runs.number(i, "L"), rec.runs.number(i, q), std::string(q)});
  } else if (kind == "heatmap") {
    if (rec.fields.empty()) throw InvalidInput("emit_plotdata: record has no fields for a heat map");
    t.columns = {"x", "y", "value", "group"};
    for (const auto& [name, f] : rec.fields) {
      const auto v = to_physical(f);
      const int N = f.grid().modes_per_dim();
      const double h = f.grid().spacing();
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) t.add({h * i, h * j, v[std::size_t(i) * N + j], name});
    }
  } else {
    throw InvalidInput("emit_plotdata: unknown kind '" + kind + "'");
  }
  return t;
}

/// Plot kinds that make sense for an experiment.
inline std::vector<std::string> plot_kinds(const std::string& experiment) {
  if (experiment == "renorm-sweep") return {"convergence"};
  if (experiment == "tails") return {"tail"};
  if (experiment == "localization") return {"ipr", "heatmap"};
  if (experiment == "growth") return {"growth"};
  return {};
}

/// Writes `<dir>/<prefix>_<kind>.csv`; nothing is written when the table cannot be built.
inline PlotEmission emit_plotdata(const ExperimentRecord& rec, const std::string& kind, const std::string& dir,
                                  const std::string& prefix = "plot") {
  const Table t = plot_table(rec, kind);
  PlotEmission e;
  e.partial = !rec.complete;
  const std::string path = dir + "/" + prefix + "_" + kind + ".csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_plotdata: cannot write '" + path + "'");
  out << to_csv(t);
  e.files.push_back(path);
  return e;
}

}  // namespace paraspec

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "paraspec/error.hpp"

namespace paraspec::stats {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      c_ += (sum_ - t) + v;
    else
      c_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + c_; }

 private:
  double sum_ = 0.0, c_ = 0.0;
};

inline double mean(std::span<const double> x) {
  if (x.empty()) throw InvalidInput("stats::mean: empty sample");
  CompensatedSum s;
  for (double v : x) s.add(v);
  return s.value() / double(x.size());
}

/// Unbiased sample variance.
inline double variance(std::span<const double> x) {
  if (x.size() < 2) throw InvalidInput("stats::variance: need at least two samples");
  const double m = mean(x);
  CompensatedSum s;
  for (double v : x) s.add((v - m) * (v - m));
  return s.value() / double(x.size() - 1);
}

inline double standard_error(std::span<const double> x) { return std::sqrt(variance(x) / double(x.size())); }

inline double median(std::vector<double> x) {
  if (x.empty()) throw InvalidInput("stats::median: empty sample");
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

/// Standard Gumbel (maximum) CDF exp(-e^{-x}).
inline double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

/// Kolmogorov-Smirnov distance sup |F_n - F| of a sample to a continuous CDF.
inline double ks_distance(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw InvalidInput("stats::ks_distance: empty sample");
  std::sort(x.begin(), x.end());
  const double n = double(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = cdf(x[i]);
    d = std::max({d, F - double(i) / n, double(i + 1) / n - F});
  }
  return d;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;  ///< standard error of the slope (unweighted residual estimate)
};

/// Weighted least squares y ~ intercept + slope x; empty weights mean unit weights.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y, std::span<const double> w = {}) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n || (!w.empty() && w.size() != n)) throw InvalidInput("stats::linear_fit: bad sizes");
  auto wt = [&](std::size_t i) { return w.empty() ? 1.0 : w[i]; };
  CompensatedSum sw, sx, sy;
  for (std::size_t i = 0; i < n; ++i) {
    sw.add(wt(i));
    sx.add(wt(i) * x[i]);
    sy.add(wt(i) * y[i]);
  }
  const double W = sw.value(), mx = sx.value() / W, my = sy.value() / W;
  CompensatedSum sxx, sxy, syy;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx.add(wt(i) * dx * dx);
    sxy.add(wt(i) * dx * dy);
    syy.add(wt(i) * dy * dy);
  }
  if (!(sxx.value() > 0.0)) throw InvalidInput("stats::linear_fit: abscissae are all equal");
  LinearFit f;
  f.slope = sxy.value() / sxx.value();
  f.intercept = my - f.slope * mx;
  CompensatedSum sse;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    sse.add(wt(i) * r * r);
  }
  f.r2 = syy.value() > 0.0 ? 1.0 - sse.value() / syy.value() : 1.0;
  if (n > 2) f.slope_se = std::sqrt(sse.value() / double(n - 2) / sxx.value());
  return f;
}

/// Empirical survival function P(X > t) evaluated at the given thresholds.
inline std::vector<double> survival(std::vector<double> x, std::span<const double> t) {
  std::sort(x.begin(), x.end());
  std::vector<double> s;
  s.reserve(t.size());
  for (double v : t) {
    const auto it = std::upper_bound(x.begin(), x.end(), v);
    s.push_back(double(x.end() - it) / double(x.size()));
  }
  return s;
}

/// Empirical CDF P(X <= t) evaluated at the given thresholds.
inline std::vector<double> empirical_cdf(std::vector<double> x, std::span<const double> t) {
  auto s = survival(std::move(x), t);
  for (double& v : s) v = 1.0 - v;
  return s;
}

}  // namespace paraspec::stats

#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "paraspec/field.hpp"

namespace paraspec {

/**
 * Fourier multiplier m(D): (m(D) f)^(n) = m(omega_n) f^(n). Symbols are
 * functions of the angular frequency vector and must be even so that real
 * fields stay real.
 */
struct MultiplierSpec {
  enum class Kind { sigma, sigma_a, laplacian, custom };

  Kind kind = Kind::custom;
  double a = 1.0;
  std::function<double(double, double)> symbol;
  std::string name;

  double operator()(double w0, double w1) const { return symbol(w0, w1); }

  /// sigma(omega) = -1 / (1 + |omega|^2), i.e. -(1 - Laplacian)^{-1}.
  static MultiplierSpec sigma() {
    return {Kind::sigma, 1.0, [](double x, double y) { return -1.0 / (1.0 + x * x + y * y); }, "sigma"};
  }
  /// sigma_a(omega) = -1 / (a + |omega|^2).
  static MultiplierSpec sigma_a(double a) {
    return {Kind::sigma_a, a, [a](double x, double y) { return -1.0 / (a + x * x + y * y); }, "sigma_a"};
  }
  /// Symbol of the Laplacian, -|omega|^2.
  static MultiplierSpec laplacian() {
    return {Kind::laplacian, 0.0, [](double x, double y) { return -(x * x + y * y); }, "laplacian"};
  }
  static MultiplierSpec custom(std::function<double(double, double)> s, std::string name = "custom") {
    return {Kind::custom, 0.0, std::move(s), std::move(name)};
  }
};

inline Field apply_multiplier(const MultiplierSpec& m, const Field& f) {
  if (!m.symbol) throw InvalidInput("apply_multiplier: empty symbol");
  const auto& g = f.grid();
  Field out(g, f.label());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto w = g.frequency(i);
    const double s = m(w[0], w[1]);
    if (!std::isfinite(s)) throw InvalidInput("apply_multiplier: symbol '" + m.name + "' is not finite on the lattice");
    out[i] = s * f[i];
  }
  return out;
}

/// Partial derivative along `axis` (symbol i*omega_axis; odd but maps real fields to real fields).
inline Field derivative(const Field& f, int axis) {
  const auto& g = f.grid();
  Field out(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_nyquist(i)) continue;
    out[i] = cplx(0.0, g.frequency(i)[axis]) * f[i];
  }
  return out;
}

inline Field laplacian(const Field& f) { return apply_multiplier(MultiplierSpec::laplacian(), f); }

}  // namespace paraspec

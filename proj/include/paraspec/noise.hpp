#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "paraspec/field.hpp"
#include "paraspec/multiplier.hpp"
#include "paraspec/paracalc.hpp"

namespace paraspec {

/// Radial frequency cutoff theta(eps |k|), k = n / L.
struct MollifierSpec {
  enum class Kind { sharp, gaussian, bump };

  Kind kind = Kind::sharp;
  double epsilon = 0.125;

  double theta(double x) const noexcept {
    switch (kind) {
      case Kind::sharp:
        return x <= 1.0 ? 1.0 : 0.0;
      case Kind::gaussian:
        return std::exp(-x * x);
      case Kind::bump:
        return x < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0;
    }
    return 0.0;
  }
  /// theta(x) <= 1e-12 beyond this argument.
  double support_bound() const noexcept {
    if (kind == Kind::gaussian) return 5.3;
    return kind == Kind::sharp ? std::nextafter(1.0, 2.0) : 1.0;
  }

  std::string name() const { return kind_name(kind); }

  static std::string kind_name(Kind k) {
    switch (k) {
      case Kind::sharp: return "sharp";
      case Kind::gaussian: return "gaussian";
      case Kind::bump: return "bump";
    }
    return "?";
  }
  static Kind parse_kind(const std::string& s) {
    if (s == "sharp") return Kind::sharp;
    if (s == "gaussian") return Kind::gaussian;
    if (s == "bump") return Kind::bump;
    throw InvalidInput("unknown mollifier '" + s + "' (expected sharp|gaussian|bump)");
  }
};

/// Lattice white noise xi = sum_n g_n e_n for one seed.
struct NoiseRealization {
  std::uint64_t seed = 0;
  Field g;  // coefficients g_n

  const TorusGrid& grid() const noexcept { return g.grid(); }
};

inline NoiseRealization sample_white_noise(const TorusGrid& grid, std::uint64_t seed) {
  return {seed, Field(grid, gaussian_coefficients(grid, seed), "white_noise")};
}

/// Warning text when the cutoff radius 1/eps exceeds N/(4L) (grid-truncated regime).
inline std::optional<std::string> resolution_warning(const TorusGrid& grid, const MollifierSpec& m) {
  const double radius_modes = grid.side_length() / m.epsilon;
  if (radius_modes <= grid.modes_per_dim() / 4.0) return std::nullopt;
  return "cutoff radius L/eps = " + std::to_string(radius_modes) + " modes exceeds N/4 = " +
         std::to_string(grid.modes_per_dim() / 4) + "; noise and c_eps are grid-truncated";
}

inline Field mollify(const NoiseRealization& noise, const MollifierSpec& m) {
  if (!(m.epsilon > 0.0)) throw InvalidInput("mollify: epsilon must be positive");
  const auto& grid = noise.grid();
  Field out(grid, "xi_eps");
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = m.theta(m.epsilon * grid.wavenumber(i)) * noise.g[i];
  return out;
}

/// c_eps = L^{-dim} sum_n theta(eps |n|/L)^2 / (1 + |omega_n|^2) over the grid's modes.
inline double renorm_constant(const TorusGrid& grid, const MollifierSpec& m) {
  if (!(m.epsilon > 0.0)) throw InvalidInput("renorm_constant: epsilon must be positive");
  // Neumaier-compensated summation.
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.is_nyquist(i)) continue;
    const double th = m.theta(m.epsilon * grid.wavenumber(i));
    if (th == 0.0) continue;
    const double term = th * th / (1.0 + grid.frequency_sq(i));
    const double t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return (sum + comp) / grid.volume();
}

/// Xi_2 = xi o sigma(D) xi + c.
inline Field resonant_enhancement(const Field& xi_eps, double c_eps, const DyadicPartition& P) {
  if (xi_eps.hermitian_defect() > 1e-12 * std::max(1.0, norm(xi_eps)))
    throw InvalidInput("resonant_enhancement: noise field is not real-valued");
  Field out = resonant(xi_eps, apply_multiplier(MultiplierSpec::sigma(), xi_eps), P);
  out.add_constant(c_eps);
  out.set_label("xi2_eps");
  return out;
}

/// The pair (xi_eps, Xi_2^eps) with its renormalization constant.
struct EnhancedNoise {
  Field xi_eps;
  Field xi2_eps;
  double c_eps = 0.0;
  MollifierSpec mollifier;
  std::uint64_t seed = 0;

  const TorusGrid& grid() const noexcept { return xi_eps.grid(); }
};

inline EnhancedNoise enhance(const NoiseRealization& noise, const MollifierSpec& m,
                             const DyadicPartition& P = DyadicPartition{}) {
  EnhancedNoise e;
  e.mollifier = m;
  e.seed = noise.seed;
  e.xi_eps = mollify(noise, m);
  e.c_eps = renorm_constant(noise.grid(), m);
  e.xi2_eps = resonant_enhancement(e.xi_eps, e.c_eps, P);
  return e;
}

/// Enhancement of an arbitrary smooth potential with an explicit constant (deterministic inputs).
inline EnhancedNoise enhance_field(const Field& xi, double c, const DyadicPartition& P = DyadicPartition{}) {
  EnhancedNoise e;
  e.xi_eps = xi;
  e.c_eps = c;
  e.xi2_eps = resonant_enhancement(xi, c, P);
  return e;
}

}  // namespace paraspec

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "paraspec/error.hpp"

namespace paraspec {

/// Integer lattice index of a Fourier mode; unused trailing entries are zero.
using Mode = std::array<int, 2>;

/**
 * Uniform discretization of the periodic box [0,L]^dim.
 *
 * Modes are stored in FFT order: along each axis, storage index i holds the
 * mode n = i for i < N/2 and n = i - N otherwise, so n ranges over
 * [-N/2, N/2). The basis function of mode n is
 *
 *     e_n(x) = L^{-dim/2} exp(2 pi i <n, x> / L),
 *
 * which is orthonormal in L^2. Differential symbols are evaluated at the
 * angular frequency omega = 2 pi n / L; the mollifier uses the wavenumber
 * k = n / L. The mode n = -N/2 along any axis (Nyquist) is kept at zero in
 * every field so that Hermitian pairing is unambiguous.
 */
class TorusGrid {
 public:
  TorusGrid() = default;
  TorusGrid(int dim, double side_length, int modes_per_dim)
      : dim_(dim), length_(side_length), n_(modes_per_dim) {
    if (dim != 1 && dim != 2) throw InvalidInput("TorusGrid: dim must be 1 or 2");
    if (!(side_length > 0.0) || !std::isfinite(side_length))
      throw InvalidInput("TorusGrid: side length must be positive");
    if (modes_per_dim < 4 || modes_per_dim % 2 != 0)
      throw InvalidInput("TorusGrid: modes per dimension must be even and >= 4");
  }

  int dim() const noexcept { return dim_; }
  double side_length() const noexcept { return length_; }
  int modes_per_dim() const noexcept { return n_; }
  std::size_t size() const noexcept {
    return dim_ == 1 ? static_cast<std::size_t>(n_) : static_cast<std::size_t>(n_) * n_;
  }
  double spacing() const noexcept { return length_ / n_; }
  /// Volume element of one physical sample, h^dim.
  double cell_volume() const noexcept { return std::pow(spacing(), dim_); }
  double volume() const noexcept { return std::pow(length_, dim_); }

  /// Signed mode number stored at axis index i.
  int mode_of_index(int i) const noexcept { return i < n_ / 2 ? i : i - n_; }
  /// Axis index storing signed mode n (n taken modulo N).
  int index_of_mode(int n) const noexcept { return ((n % n_) + n_) % n_; }

  Mode mode(std::size_t flat) const noexcept {
    if (dim_ == 1) return {mode_of_index(static_cast<int>(flat)), 0};
    return {mode_of_index(static_cast<int>(flat / n_)), mode_of_index(static_cast<int>(flat % n_))};
  }
  std::size_t flat_index(const Mode& m) const noexcept {
    if (dim_ == 1) return static_cast<std::size_t>(index_of_mode(m[0]));
    return static_cast<std::size_t>(index_of_mode(m[0])) * n_ + index_of_mode(m[1]);
  }
  /// Storage index of the mode -n.
  std::size_t negated(std::size_t flat) const noexcept {
    Mode m = mode(flat);
    return flat_index({-m[0], -m[1]});
  }
  bool is_nyquist(std::size_t flat) const noexcept {
    Mode m = mode(flat);
    return m[0] == -n_ / 2 || (dim_ == 2 && m[1] == -n_ / 2);
  }
  bool representable(const Mode& m) const noexcept {
    const int h = n_ / 2;
    if (m[0] <= -h || m[0] >= h) return false;
    if (dim_ == 2 && (m[1] <= -h || m[1] >= h)) return false;
    return true;
  }

  double frequency_unit() const noexcept { return 2.0 * std::numbers::pi / length_; }
  /// Angular frequency 2 pi n / L of a stored mode.
  std::array<double, 2> frequency(std::size_t flat) const noexcept {
    Mode m = mode(flat);
    return {frequency_unit() * m[0], frequency_unit() * m[1]};
  }
  /// |omega|^2 for a stored mode.
  double frequency_sq(std::size_t flat) const noexcept {
    auto w = frequency(flat);
    return w[0] * w[0] + w[1] * w[1];
  }
  /// |n| / L, the lattice variable fed to mollifiers.
  double wavenumber(std::size_t flat) const noexcept {
    Mode m = mode(flat);
    return std::sqrt(double(m[0]) * m[0] + double(m[1]) * m[1]) / length_;
  }
  /// Largest |omega| among non-Nyquist modes.
  double max_frequency() const noexcept {
    return frequency_unit() * (n_ / 2 - 1) * std::sqrt(double(dim_));
  }

  bool operator==(const TorusGrid& o) const noexcept {
    return dim_ == o.dim_ && length_ == o.length_ && n_ == o.n_;
  }
  bool operator!=(const TorusGrid& o) const noexcept { return !(*this == o); }

  std::string describe() const {
    return "TorusGrid(dim=" + std::to_string(dim_) + ", L=" + std::to_string(length_) +
           ", N=" + std::to_string(n_) + ")";
  }

 private:
  int dim_ = 2;
  double length_ = 1.0;
  int n_ = 16;
};

}  // namespace paraspec

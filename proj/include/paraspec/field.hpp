#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "paraspec/error.hpp"
#include "paraspec/grid.hpp"

namespace paraspec {

using cplx = std::complex<double>;

/**
 * A real scalar field on a TorusGrid, held as its Fourier coefficients in the
 * orthonormal basis e_n (FFT storage order). Real-valuedness is the Hermitian
 * symmetry coeffs(-n) = conj(coeffs(n)); the Nyquist modes are zero.
 */
class Field {
 public:
  Field() = default;
  explicit Field(TorusGrid grid, std::string label = {})
      : grid_(grid), coeffs_(grid.size(), cplx{}), label_(std::move(label)) {}
  Field(TorusGrid grid, std::vector<cplx> coeffs, std::string label = {})
      : grid_(grid), coeffs_(std::move(coeffs)), label_(std::move(label)) {
    if (coeffs_.size() != grid_.size()) throw InvalidInput("Field: coefficient count does not match grid");
  }

  /// Field equal to `value` everywhere.
  static Field constant(const TorusGrid& grid, double value, std::string label = {}) {
    Field f(grid, std::move(label));
    f.coeffs_[0] = value * std::sqrt(grid.volume());
    return f;
  }

  /// amplitude * e_n + conj(amplitude) * e_{-n} (just amplitude * e_0 for n = 0).
  static Field mode_pair(const TorusGrid& grid, const Mode& n, cplx amplitude, std::string label = {}) {
    if (!grid.representable(n)) throw InvalidInput("Field::mode_pair: mode not representable");
    Field f(grid, std::move(label));
    const auto i = grid.flat_index(n);
    const auto j = grid.negated(i);
    if (i == j) {
      f.coeffs_[i] = amplitude.real();
    } else {
      f.coeffs_[i] = amplitude;
      f.coeffs_[j] = std::conj(amplitude);
    }
    return f;
  }

  const TorusGrid& grid() const noexcept { return grid_; }
  const std::vector<cplx>& coeffs() const noexcept { return coeffs_; }
  std::vector<cplx>& coeffs() noexcept { return coeffs_; }
  cplx operator[](std::size_t i) const noexcept { return coeffs_[i]; }
  cplx& operator[](std::size_t i) noexcept { return coeffs_[i]; }
  cplx at(const Mode& n) const { return coeffs_[grid_.flat_index(n)]; }
  const std::string& label() const noexcept { return label_; }
  void set_label(std::string s) { label_ = std::move(s); }

  /// Spatial mean (1/|T|) * integral of f.
  double mean() const noexcept { return coeffs_[0].real() / std::sqrt(grid_.volume()); }

  /// Largest violation of Hermitian symmetry, including nonzero Nyquist content.
  double hermitian_defect() const noexcept {
    double d = 0.0;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
      if (grid_.is_nyquist(i)) {
        d = std::max(d, std::abs(coeffs_[i]));
        continue;
      }
      d = std::max(d, std::abs(coeffs_[grid_.negated(i)] - std::conj(coeffs_[i])));
    }
    return d;
  }

  /// Projects onto real fields: averages each coefficient with its mirrored conjugate.
  Field& symmetrize() {
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
      if (grid_.is_nyquist(i)) {
        coeffs_[i] = 0.0;
        continue;
      }
      const auto j = grid_.negated(i);
      if (j < i) continue;
      const cplx avg = 0.5 * (coeffs_[i] + std::conj(coeffs_[j]));
      coeffs_[i] = avg;
      coeffs_[j] = std::conj(avg);
    }
    return *this;
  }

  Field& operator+=(const Field& o) {
    check_same(o, "Field::operator+=");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    check_same(o, "Field::operator-=");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  Field& operator*=(double s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }
  /// this += s * o
  Field& axpy(double s, const Field& o) {
    check_same(o, "Field::axpy");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += s * o.coeffs_[i];
    return *this;
  }
  /// Adds a constant function with value c.
  Field& add_constant(double c) {
    coeffs_[0] += c * std::sqrt(grid_.volume());
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator*(Field a, double s) { return a *= s; }
  friend Field operator-(Field a) { return a *= -1.0; }

  void check_same(const Field& o, const char* where) const {
    if (grid_ != o.grid_) throw GridMismatch(where);
  }

 private:
  TorusGrid grid_;
  std::vector<cplx> coeffs_;
  std::string label_;
};

/// L^2 inner product of real fields.
inline double inner(const Field& a, const Field& b) {
  a.check_same(b, "inner");
  double s = 0.0;
  const auto& x = a.coeffs();
  const auto& y = b.coeffs();
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
  return s;
}

inline double norm(const Field& a) { return std::sqrt(inner(a, a)); }

/// Largest coefficient-wise difference.
inline double max_abs_diff(const Field& a, const Field& b) {
  a.check_same(b, "max_abs_diff");
  double d = 0.0;
  for (std::size_t i = 0; i < a.coeffs().size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

/// Same field on another resolution of the same torus: common modes copied, the rest zero.
inline Field resample(const Field& f, const TorusGrid& target) {
  const auto& g = f.grid();
  if (g.dim() != target.dim() || g.side_length() != target.side_length())
    throw GridMismatch("resample: grids describe different tori");
  Field out(target, f.label());
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target.is_nyquist(i)) continue;
    const Mode n = target.mode(i);
    if (!g.representable(n)) continue;
    out[i] = f.at(n);
  }
  return out;
}

/// ||a - b|| / max(||b||, tiny)
inline double relative_error(const Field& a, const Field& b) {
  const double nb = norm(b);
  return norm(a - b) / (nb > 0.0 ? nb : 1.0);
}

}  // namespace paraspec

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "paraspec/fft.hpp"
#include "paraspec/field.hpp"
#include "paraspec/noise.hpp"
#include "paraspec/transform.hpp"

namespace paraspec {

/**
 * Coordinates of real, Nyquist-free fields as a real vector with the Euclidean
 * inner product equal to the L^2 inner product.
 *
 * Each canonical mode n != 0 (n1 > 0, or n1 = 0 and n0 > 0) contributes two
 * entries sqrt(2) Re c_n, sqrt(2) Im c_n; the zero mode contributes c_0 as the
 * last entry. The dimension is (N-1)^dim.
 */
class PackedLayout {
 public:
  explicit PackedLayout(const TorusGrid& grid) : grid_(grid) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid.is_nyquist(i)) continue;
      const Mode n = grid.mode(i);
      if (n[1] > 0 || (n[1] == 0 && n[0] > 0)) modes_.push_back(i);
    }
  }

  const TorusGrid& grid() const noexcept { return grid_; }
  std::size_t dimension() const noexcept { return 2 * modes_.size() + 1; }
  /// Storage indices (in the grid) of the canonical modes, in packing order.
  const std::vector<std::size_t>& modes() const noexcept { return modes_; }

  std::vector<double> pack(const Field& f) const {
    if (f.grid() != grid_) throw GridMismatch("PackedLayout::pack");
    std::vector<double> x(dimension());
    const double r2 = std::sqrt(2.0);
    for (std::size_t q = 0; q < modes_.size(); ++q) {
      const cplx c = f[modes_[q]];
      x[2 * q] = r2 * c.real();
      x[2 * q + 1] = r2 * c.imag();
    }
    x.back() = f[0].real();
    return x;
  }

  Field unpack(const double* x, std::string label = {}) const {
    Field f(grid_, std::move(label));
    const double s = 1.0 / std::sqrt(2.0);
    for (std::size_t q = 0; q < modes_.size(); ++q) {
      const cplx c(s * x[2 * q], s * x[2 * q + 1]);
      f[modes_[q]] = c;
      f[grid_.negated(modes_[q])] = std::conj(c);
    }
    f[0] = x[dimension() - 1];
    return f;
  }
  Field unpack(const std::vector<double>& x, std::string label = {}) const { return unpack(x.data(), std::move(label)); }

 private:
  TorusGrid grid_;
  std::vector<std::size_t> modes_;
};

/**
 * Matrix-free H = -Laplacian + xi_eps + c_eps on the Fourier Galerkin space of
 * the grid. The potential product is dealiased (3/2 rule), which makes the
 * discrete operator exactly symmetric.
 */
class HamiltonianOp {
 public:
  HamiltonianOp(const Field& potential, double shift) : layout_(potential.grid()), shift_(shift) {
    const auto& g = layout_.grid();
    m_ = padded_modes(g.modes_per_dim());
    potential_ = padded_samples(potential, m_);
    const std::size_t total = g.dim() == 1 ? std::size_t(m_) : std::size_t(m_) * m_;
    // The L^{dim/2} factors of sampling and analysis cancel; fold 1/M^dim into the potential.
    for (auto& v : potential_) v /= double(total);
    const auto& modes = layout_.modes();
    const int hm = fft::half_len(m_);
    pos_.resize(modes.size());
    mirror_.assign(modes.size(), -1);
    omega2_.resize(modes.size());
    for (std::size_t q = 0; q < modes.size(); ++q) {
      const Mode n = g.mode(modes[q]);
      omega2_[q] = g.frequency_sq(modes[q]);
      if (g.dim() == 1) {
        pos_[q] = n[0];
        continue;
      }
      if (n[1] > 0) {
        pos_[q] = long(((n[0] % m_) + m_) % m_) * hm + n[1];
      } else {  // n1 == 0, n0 > 0: the column-0 pair is stored twice
        pos_[q] = long(n[0]) * hm;
        mirror_[q] = long(m_ - n[0]) * hm;
      }
    }
    half_.resize(fft::half_size(g.dim(), m_));
    samples_.resize(total);
  }

  explicit HamiltonianOp(const EnhancedNoise& e) : HamiltonianOp(e.xi_eps, e.c_eps) {}

  const TorusGrid& grid() const noexcept { return layout_.grid(); }
  const PackedLayout& layout() const noexcept { return layout_; }
  std::size_t dimension() const noexcept { return layout_.dimension(); }
  double shift() const noexcept { return shift_; }
  std::size_t fft_count() const noexcept { return fft_count_; }
  std::size_t apply_count() const noexcept { return apply_count_; }

  /// y = H x in packed coordinates. Not reentrant: uses per-operator work buffers.
  void apply(const double* x, double* y) const {
    const auto& g = layout_.grid();
    const std::size_t nq = pos_.size();
    const double r2 = std::sqrt(2.0), ir2 = 1.0 / std::sqrt(2.0);
    std::fill(half_.begin(), half_.end(), cplx{});
    for (std::size_t q = 0; q < nq; ++q) {
      const cplx c(ir2 * x[2 * q], ir2 * x[2 * q + 1]);
      half_[std::size_t(pos_[q])] = c;
      if (mirror_[q] >= 0) half_[std::size_t(mirror_[q])] = std::conj(c);
    }
    half_[0] = x[2 * nq];
    fft::c2r(g.dim(), m_, half_.data(), samples_.data());
    for (std::size_t k = 0; k < samples_.size(); ++k) samples_[k] *= potential_[k];
    fft::r2c(g.dim(), m_, samples_.data(), half_.data());
    fft_count_ += 2;
    ++apply_count_;
    for (std::size_t q = 0; q < nq; ++q) {
      const cplx c = half_[std::size_t(pos_[q])];
      const double d = omega2_[q] + shift_;
      y[2 * q] = r2 * c.real() + d * x[2 * q];
      y[2 * q + 1] = r2 * c.imag() + d * x[2 * q + 1];
    }
    y[2 * nq] = half_[0].real() + shift_ * x[2 * nq];
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> y(x.size());
    apply(x.data(), y.data());
    return y;
  }

 private:
  PackedLayout layout_;
  double shift_;
  int m_ = 0;
  std::vector<double> potential_;
  std::vector<long> pos_, mirror_;
  std::vector<double> omega2_;
  mutable std::vector<cplx> half_;
  mutable std::vector<double> samples_;
  mutable std::size_t fft_count_ = 0;
  mutable std::size_t apply_count_ = 0;
};

/// H f = -Laplacian f + (xi_eps + c_eps) f.
inline Field apply_H(const HamiltonianOp& op, const Field& f) {
  if (f.grid() != op.grid()) throw GridMismatch("apply_H");
  const auto x = op.layout().pack(f);
  return op.layout().unpack(op.apply(x), f.label());
}

}  // namespace paraspec

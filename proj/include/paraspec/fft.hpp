#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace paraspec::fft {

using cplx = std::complex<double>;

namespace detail {

enum class Kind { forward, backward, r2c, c2r };

// FFTW planning is not thread-safe; execution on fresh arrays is. Plans are
// created once per (kind, dim, n) under a lock and never destroyed.
// FFTW_ESTIMATE keeps plan selection (and so rounding) identical across runs.
inline fftw_plan plan_for(Kind kind, int dim, int n) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_tuple(static_cast<int>(kind), dim, n);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  int dims[2] = {n, n};
  const std::size_t total = dim == 1 ? std::size_t(n) : std::size_t(n) * n;
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  fftw_plan p = nullptr;
  std::vector<cplx> cbuf(total + 2);
  std::vector<double> rbuf(2 * total + 4);
  auto* c = reinterpret_cast<fftw_complex*>(cbuf.data());
  switch (kind) {
    case Kind::forward:
      p = fftw_plan_dft(dim, dims, c, c, FFTW_FORWARD, flags);
      break;
    case Kind::backward:
      p = fftw_plan_dft(dim, dims, c, c, FFTW_BACKWARD, flags);
      break;
    case Kind::r2c:
      p = fftw_plan_dft_r2c(dim, dims, rbuf.data(), c, flags);
      break;
    case Kind::c2r:
      p = fftw_plan_dft_c2r(dim, dims, c, rbuf.data(), flags);
      break;
  }
  cache.emplace(key, p);
  return p;
}

}  // namespace detail

/// Length of the last axis in the half-spectrum (r2c) layout.
inline int half_len(int n) { return n / 2 + 1; }
inline std::size_t half_size(int dim, int n) {
  return dim == 1 ? std::size_t(half_len(n)) : std::size_t(n) * half_len(n);
}

/// Unnormalized forward DFT: out_k = sum_j in_j exp(-2 pi i jk/n). In-place allowed.
inline void forward(int dim, int n, const cplx* in, cplx* out) {
  fftw_execute_dft(detail::plan_for(detail::Kind::forward, dim, n),
                   reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

/// Unnormalized backward DFT: out_j = sum_k in_k exp(+2 pi i jk/n). In-place allowed.
inline void backward(int dim, int n, const cplx* in, cplx* out) {
  fftw_execute_dft(detail::plan_for(detail::Kind::backward, dim, n),
                   reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

/// Real-to-half-spectrum forward DFT (input preserved).
inline void r2c(int dim, int n, const double* in, cplx* out) {
  fftw_execute_dft_r2c(detail::plan_for(detail::Kind::r2c, dim, n), const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

/// Half-spectrum-to-real backward DFT. Destroys `in`.
inline void c2r(int dim, int n, cplx* in, double* out) {
  fftw_execute_dft_c2r(detail::plan_for(detail::Kind::c2r, dim, n),
                       reinterpret_cast<fftw_complex*>(in), out);
}

}  // namespace paraspec::fft

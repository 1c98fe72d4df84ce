#pragma once

// Binary field snapshot, little-endian:
//   "PSFS" | u32 version=1 | u32 dim | u32 N | f64 L | u32 label_len | label bytes
//   | N^dim x (f32 re, f32 im) coefficients in FFT storage order.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "paraspec/field.hpp"

namespace paraspec::snapshot {

namespace detail {

template <class T>
void put(std::vector<unsigned char>& buf, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  buf.insert(buf.end(), bytes, bytes + sizeof(T));
}

template <class T>
T get(const std::vector<unsigned char>& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw InvalidInput("snapshot: truncated data");
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, buf.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  pos += sizeof(T);
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace detail

inline std::vector<unsigned char> encode(const Field& f) {
  std::vector<unsigned char> buf;
  buf.insert(buf.end(), {'P', 'S', 'F', 'S'});
  detail::put<std::uint32_t>(buf, 1);
  detail::put<std::uint32_t>(buf, std::uint32_t(f.grid().dim()));
  detail::put<std::uint32_t>(buf, std::uint32_t(f.grid().modes_per_dim()));
  detail::put<double>(buf, f.grid().side_length());
  detail::put<std::uint32_t>(buf, std::uint32_t(f.label().size()));
  buf.insert(buf.end(), f.label().begin(), f.label().end());
  for (const auto& c : f.coeffs()) {
    detail::put<float>(buf, static_cast<float>(c.real()));
    detail::put<float>(buf, static_cast<float>(c.imag()));
  }
  return buf;
}

inline Field decode(const std::vector<unsigned char>& buf) {
  if (buf.size() < 4 || std::memcmp(buf.data(), "PSFS", 4) != 0) throw InvalidInput("snapshot: bad magic");
  std::size_t pos = 4;
  if (detail::get<std::uint32_t>(buf, pos) != 1) throw InvalidInput("snapshot: unsupported version");
  const int dim = int(detail::get<std::uint32_t>(buf, pos));
  const int n = int(detail::get<std::uint32_t>(buf, pos));
  const double len = detail::get<double>(buf, pos);
  const std::uint32_t label_len = detail::get<std::uint32_t>(buf, pos);
  if (pos + label_len > buf.size()) throw InvalidInput("snapshot: truncated label");
  std::string label(buf.begin() + long(pos), buf.begin() + long(pos + label_len));
  pos += label_len;
  TorusGrid grid(dim, len, n);
  std::vector<cplx> coeffs(grid.size());
  for (auto& c : coeffs) {
    const float re = detail::get<float>(buf, pos);
    const float im = detail::get<float>(buf, pos);
    c = cplx(re, im);
  }
  if (pos != buf.size()) throw InvalidInput("snapshot: trailing bytes");
  return Field(grid, std::move(coeffs), std::move(label));
}

inline void write(const std::string& path, const Field& f) {
  const auto buf = encode(f);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("snapshot: cannot open " + path);
  out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
}

inline Field read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("snapshot: cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(buf);
}

}  // namespace paraspec::snapshot

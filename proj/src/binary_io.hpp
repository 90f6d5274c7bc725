#pragma once

// Little-endian stream helpers shared by the binary container formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cbir/errors.hpp"

namespace cbir::detail {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  unsigned char bytes[sizeof(T)];
  auto u = static_cast<std::make_unsigned_t<T>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<unsigned char>(u & 0xFF);
    u = static_cast<std::make_unsigned_t<T>>(u >> 8);
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

inline void put_f32(std::ostream& out, double value) {
  put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(value)));
}

inline void put_f64(std::ostream& out, double value) { put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(value)); }

inline void put_string(std::ostream& out, const std::string& s) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  Reader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  void bytes(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw IoError("truncated " + what_);
  }

  template <typename T>
  T le() {
    unsigned char raw[sizeof(T)];
    bytes(raw, sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = sizeof(T); i-- > 0;) u = static_cast<std::make_unsigned_t<T>>((u << 8) | raw[i]);
    return static_cast<T>(u);
  }

  double f32() { return static_cast<double>(std::bit_cast<float>(le<std::uint32_t>())); }

  std::string string(std::size_t max_len = 1 << 20) {
    const auto n = le<std::uint32_t>();
    if (n > max_len) throw FormatError("implausible string length in " + what_);
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }

  void f32s(std::span<double> dst) {
    for (double& d : dst) d = f32();
  }

  void f64s(std::span<double> dst) {
    for (double& d : dst) d = f64();
  }

  const std::string& what() const noexcept { return what_; }

 private:
  std::istream& in_;
  std::string what_;
};

}  // namespace cbir::detail

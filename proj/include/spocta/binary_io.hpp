#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "spocta/error.hpp"

namespace spocta::binio {

template <typename T>
void put(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes{};
  if constexpr (std::is_floating_point_v<T>) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U bits;
    std::memcpy(&bits, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  } else {
    using U = std::make_unsigned_t<T>;
    const U bits = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  }
  os.write(bytes.data(), bytes.size());
}

/// Reads a little-endian value; `what` names the field for diagnostics.
template <typename T>
T get(std::istream& is, const char* what) {
  static_assert(std::is_trivially_copyable_v<T>);
  const auto offset = static_cast<long long>(is.tellg());
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw Error(ErrorCode::FileFormat, std::string("truncated input reading ") + what +
                                           " at byte offset " + std::to_string(offset));
  }
  if constexpr (std::is_floating_point_v<T>) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= U{bytes[i]} << (8 * i);
    T value;
    std::memcpy(&value, &bits, sizeof(T));
    return value;
  } else {
    using U = std::make_unsigned_t<T>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(U{bytes[i]} << (8 * i));
    return static_cast<T>(bits);
  }
}

inline void expect_magic(std::istream& is, const char (&magic)[5]) {
  char got[4] = {};
  if (!is.read(got, 4) || std::memcmp(got, magic, 4) != 0) {
    throw Error(ErrorCode::FileFormat,
                std::string("bad magic at byte offset 0, expected \"") + magic + "\"");
  }
}

}  // namespace spocta::binio

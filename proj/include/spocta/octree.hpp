#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "spocta/types.hpp"

namespace spocta {

/// Octal octree code. Digit at level i is {z_i y_i x_i} read as a 3-bit value
/// (z most significant); level 1 sits in the lowest three bits of `value`.
struct OctreeCode {
  std::uint64_t value = 0;
  unsigned levels = 0;

  /// Digit phi_level, level in [1, levels].
  unsigned digit(unsigned level) const noexcept {
    return static_cast<unsigned>((value >> (3 * (level - 1))) & 7u);
  }

  /// Digits from phi_L down to phi_1.
  std::vector<std::uint8_t> digits() const;

  /// Throws Error(InvalidOffset) when a digit is >= 8.
  static OctreeCode from_digits(std::span<const std::uint8_t> most_significant_first);

  friend constexpr auto operator<=>(const OctreeCode&, const OctreeCode&) = default;
};

inline constexpr unsigned kMaxLevels = 16;

/// Throws Error(CoordinateOutOfRange) if a component is >= 2^levels.
OctreeCode encode(Coordinate c, unsigned levels);
Coordinate decode(const OctreeCode& code);

/// Full 16-level octree code as an integer; sorting by it is Morton order.
std::uint64_t morton_key(Coordinate c) noexcept;

inline constexpr unsigned kBlockLevels = 4;
inline constexpr std::uint16_t kBlockEdge = 1u << kBlockLevels;

struct BlockId {
  std::uint16_t bx = 0;
  std::uint16_t by = 0;
  std::uint16_t bz = 0;

  friend constexpr auto operator<=>(const BlockId&, const BlockId&) = default;
};

constexpr BlockId block_of(Coordinate c) noexcept {
  return BlockId{static_cast<std::uint16_t>(c.x >> kBlockLevels),
                 static_cast<std::uint16_t>(c.y >> kBlockLevels),
                 static_cast<std::uint16_t>(c.z >> kBlockLevels)};
}

constexpr Coordinate local_of(Coordinate c) noexcept {
  return Coordinate{static_cast<std::uint16_t>(c.x & (kBlockEdge - 1)),
                    static_cast<std::uint16_t>(c.y & (kBlockEdge - 1)),
                    static_cast<std::uint16_t>(c.z & (kBlockEdge - 1))};
}

std::uint64_t morton_key(BlockId b) noexcept;

/// Sorts coordinates (or indices into them) in Morton order.
std::vector<std::uint32_t> morton_order(std::span<const Coordinate> coords);

}  // namespace spocta

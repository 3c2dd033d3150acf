#include "spocta/octree.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "spocta/error.hpp"

namespace spocta {

namespace {

// Spreads the low 16 bits of v so bit i lands on bit 3i.
constexpr std::uint64_t spread3(std::uint64_t v) noexcept {
  v &= 0xffffu;
  v = (v | (v << 32)) & 0x001f00000000ffffULL;
  v = (v | (v << 16)) & 0x001f0000ff0000ffULL;
  v = (v | (v << 8)) & 0x100f00f00f00f00fULL;
  v = (v | (v << 4)) & 0x10c30c30c30c30c3ULL;
  v = (v | (v << 2)) & 0x1249249249249249ULL;
  return v;
}

constexpr std::uint16_t compact3(std::uint64_t v) noexcept {
  v &= 0x1249249249249249ULL;
  v = (v | (v >> 2)) & 0x10c30c30c30c30c3ULL;
  v = (v | (v >> 4)) & 0x100f00f00f00f00fULL;
  v = (v | (v >> 8)) & 0x001f0000ff0000ffULL;
  v = (v | (v >> 16)) & 0x001f00000000ffffULL;
  v = (v | (v >> 32)) & 0xffffULL;
  return static_cast<std::uint16_t>(v);
}

}  // namespace

std::vector<std::uint8_t> OctreeCode::digits() const {
  std::vector<std::uint8_t> out(levels);
  for (unsigned level = levels; level >= 1; --level) {
    out[levels - level] = static_cast<std::uint8_t>(digit(level));
  }
  return out;
}

OctreeCode OctreeCode::from_digits(std::span<const std::uint8_t> most_significant_first) {
  if (most_significant_first.size() > kMaxLevels) {
    throw Error(ErrorCode::CoordinateOutOfRange, "octree code longer than 16 levels");
  }
  OctreeCode code;
  code.levels = static_cast<unsigned>(most_significant_first.size());
  for (const std::uint8_t d : most_significant_first) {
    if (d >= 8) {
      throw Error(ErrorCode::InvalidOffset, "octree digit " + std::to_string(d) + " is not octal");
    }
    code.value = (code.value << 3) | d;
  }
  return code;
}

OctreeCode encode(Coordinate c, unsigned levels) {
  if (levels > kMaxLevels) {
    throw Error(ErrorCode::CoordinateOutOfRange, "octree depth exceeds 16 levels");
  }
  const std::uint32_t limit = 1u << levels;
  if (c.x >= limit || c.y >= limit || c.z >= limit) {
    throw Error(ErrorCode::CoordinateOutOfRange,
                "coordinate component does not fit in " + std::to_string(levels) + " levels");
  }
  return OctreeCode{morton_key(c), levels};
}

Coordinate decode(const OctreeCode& code) {
  return Coordinate{compact3(code.value), compact3(code.value >> 1), compact3(code.value >> 2)};
}

std::uint64_t morton_key(Coordinate c) noexcept {
  return spread3(c.x) | (spread3(c.y) << 1) | (spread3(c.z) << 2);
}

std::uint64_t morton_key(BlockId b) noexcept {
  return spread3(b.bx) | (spread3(b.by) << 1) | (spread3(b.bz) << 2);
}

std::vector<std::uint32_t> morton_order(std::span<const Coordinate> coords) {
  std::vector<std::uint64_t> keys(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) keys[i] = morton_key(coords[i]);
  std::vector<std::uint32_t> order(coords.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return keys[a] < keys[b]; });
  return order;
}

}  // namespace spocta

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

namespace spocta {

/// Voxel position on the quantized grid. Each component fits in 16 bits.
struct Coordinate {
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::uint16_t z = 0;

  friend constexpr auto operator<=>(const Coordinate&, const Coordinate&) = default;
};

struct CoordinateHash {
  std::size_t operator()(const Coordinate& c) const noexcept {
    std::uint64_t key = std::uint64_t{c.x} | (std::uint64_t{c.y} << 16) |
                        (std::uint64_t{c.z} << 32);
    key ^= key >> 33;
    key *= 0xff51afd7ed558ccdULL;
    key ^= key >> 33;
    return static_cast<std::size_t>(key);
  }
};

/// Packs a coordinate into the low 48 bits (x lowest).
constexpr std::uint64_t pack_coordinate(const Coordinate& c) noexcept {
  return std::uint64_t{c.x} | (std::uint64_t{c.y} << 16) | (std::uint64_t{c.z} << 32);
}

enum class OpKind : std::uint8_t { Subm3, Gconv3, Gconv2, Tconv2 };

std::string_view to_string(OpKind op);
/// Accepts "subm3", "gconv3", "gconv2", "tconv2" (case-insensitive).
OpKind parse_op_kind(std::string_view text);

constexpr int kernel_size(OpKind op) noexcept {
  return (op == OpKind::Subm3 || op == OpKind::Gconv3) ? 3 : 2;
}

constexpr int stride_of(OpKind op) noexcept { return op == OpKind::Subm3 ? 1 : 2; }

constexpr std::size_t kernel_volume(int kernel) noexcept {
  return static_cast<std::size_t>(kernel * kernel * kernel);
}

/// Kernel tap relative to the anchor: delta = in - stride * out.
struct Offset {
  std::int8_t dx = 0;
  std::int8_t dy = 0;
  std::int8_t dz = 0;

  friend constexpr auto operator<=>(const Offset&, const Offset&) = default;
};

/// Lower bound of each offset component: -1 for K=3, 0 for K=2.
constexpr int offset_origin(int kernel) noexcept { return kernel == 3 ? -1 : 0; }

/// Offset ids are lexicographic over (dz, dy, dx).
constexpr std::uint8_t offset_id(Offset d, int kernel) noexcept {
  const int o = offset_origin(kernel);
  return static_cast<std::uint8_t>(((d.dz - o) * kernel + (d.dy - o)) * kernel + (d.dx - o));
}

constexpr Offset offset_from_id(std::uint8_t id, int kernel) noexcept {
  const int o = offset_origin(kernel);
  return Offset{static_cast<std::int8_t>(id % kernel + o),
                static_cast<std::int8_t>((id / kernel) % kernel + o),
                static_cast<std::int8_t>(id / (kernel * kernel) + o)};
}

inline constexpr std::uint8_t kCenterOffsetId = 13;
static_assert(offset_id(Offset{0, 0, 0}, 3) == kCenterOffsetId);
static_assert(offset_id(Offset{1, 1, 1}, 2) == 7);

/// The ordered offset set for a cubic kernel of edge 2 or 3.
std::vector<Offset> kernel_offsets(int kernel);

}  // namespace spocta

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "spocta/types.hpp"

namespace spocta {

/// Bank of a block-local coordinate: its phi_1.
constexpr unsigned bank_of(Coordinate local) noexcept {
  return ((local.z & 1u) << 2) | ((local.y & 1u) << 1) | (local.x & 1u);
}

/// Slot address inside a bank: the 9-bit value {phi_4 phi_3 phi_2}.
constexpr unsigned address_of(Coordinate local) noexcept {
  unsigned a = 0;
  for (unsigned level = 1; level < 4; ++level) {
    const unsigned d = (((local.z >> level) & 1u) << 2) | (((local.y >> level) & 1u) << 1) |
                       ((local.x >> level) & 1u);
    a |= d << (3 * (level - 1));
  }
  return a;
}

/// Block-local octree table: 8 banks x 512 slots covering the 16^3 block.
class OctreeTable {
 public:
  static constexpr unsigned kBanks = 8;
  static constexpr unsigned kSlots = 512;
  static constexpr std::uint32_t kEmpty = 0xffffffffu;

  OctreeTable() { clear(); }

  void clear() noexcept;

  /// Throws DuplicateCoordinateError if the slot is already taken and
  /// Error(CoordinateOutOfRange) if a component is >= 16.
  void insert(Coordinate local, std::uint32_t voxel);

  std::uint32_t slot(unsigned bank, unsigned address) const noexcept {
    return banks_[bank][address];
  }

  std::optional<std::uint32_t> lookup(Coordinate local) const noexcept {
    const std::uint32_t v = banks_[bank_of(local)][address_of(local)];
    if (v == kEmpty) return std::nullopt;
    return v;
  }

  std::size_t occupied() const noexcept;

 private:
  std::array<std::array<std::uint32_t, kSlots>, kBanks> banks_;
};

struct BlockVoxel {
  Coordinate local;
  std::uint32_t index = 0;
};

OctreeTable build_octree_table(std::span<const BlockVoxel> voxels);

}  // namespace spocta

#include "spocta/octree_table.hpp"

#include "spocta/error.hpp"

namespace spocta {

void OctreeTable::clear() noexcept {
  for (auto& bank : banks_) bank.fill(kEmpty);
}

void OctreeTable::insert(Coordinate local, std::uint32_t voxel) {
  if (local.x >= 16 || local.y >= 16 || local.z >= 16) {
    throw Error(ErrorCode::CoordinateOutOfRange, "block-local coordinate must be below 16");
  }
  std::uint32_t& slot = banks_[bank_of(local)][address_of(local)];
  if (slot != kEmpty) throw DuplicateCoordinateError(slot, voxel);
  slot = voxel;
}

std::size_t OctreeTable::occupied() const noexcept {
  std::size_t n = 0;
  for (const auto& bank : banks_) {
    for (const std::uint32_t v : bank) n += v != kEmpty;
  }
  return n;
}

OctreeTable build_octree_table(std::span<const BlockVoxel> voxels) {
  OctreeTable table;
  for (const BlockVoxel& v : voxels) table.insert(v.local, v.index);
  return table;
}

}  // namespace spocta

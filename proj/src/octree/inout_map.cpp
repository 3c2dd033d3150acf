#include "spocta/inout_map.hpp"

#include <algorithm>
#include <string>

#include "spocta/error.hpp"

namespace spocta {

void validate_map(const InOutMap& map, std::size_t input_count) {
  const std::size_t taps = kernel_volume(kernel_size(map.op));
  for (std::size_t i = 0; i < map.entries.size(); ++i) {
    const MapEntry& e = map.entries[i];
    if (e.in >= input_count || e.out >= map.out_coords.size() || e.kernel_offset_id >= taps) {
      throw Error(ErrorCode::MapInconsistent,
                  "map entry " + std::to_string(i) + " is out of range");
    }
  }
  std::vector<MapEntry> sorted = map.entries;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::MapInconsistent, "map holds a duplicate entry");
  }
}

std::vector<CoordTriple> canonical_triples(const InOutMap& map,
                                           std::span<const Coordinate> in_coords) {
  std::vector<CoordTriple> out;
  out.reserve(map.entries.size());
  for (const MapEntry& e : map.entries) {
    if (e.in >= in_coords.size() || e.out >= map.out_coords.size()) {
      throw Error(ErrorCode::MapInconsistent, "map entry index out of range");
    }
    out.push_back(CoordTriple{in_coords[e.in], map.out_coords[e.out], e.kernel_offset_id});
  }
  std::sort(out.begin(), out.end());
  return out;
}

PartitionShares partition_shares(const InOutMap& map) {
  PartitionShares s;
  if (kernel_size(map.op) != 3 || map.entries.empty()) return s;
  for (const MapEntry& e : map.entries) {
    const Offset d = offset_from_id(e.kernel_offset_id, 3);
    if (e.kernel_offset_id == kCenterOffsetId) {
      s.center += 1;
    } else if (d.dz == 0) {
      s.mid += 1;
    } else if (d.dz > 0) {
      s.up += 1;
    } else {
      s.down += 1;
    }
  }
  const double n = static_cast<double>(map.entries.size());
  s.center /= n;
  s.mid /= n;
  s.up /= n;
  s.down /= n;
  return s;
}

}  // namespace spocta

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spocta/types.hpp"

namespace spocta {

struct MapEntry {
  std::uint32_t in = 0;
  std::uint32_t out = 0;
  std::uint8_t kernel_offset_id = 0;

  friend constexpr auto operator<=>(const MapEntry&, const MapEntry&) = default;
};

/// Rulebook for one layer: (input row, output row, kernel tap) triples plus
/// the coordinates that define output row order.
struct InOutMap {
  OpKind op = OpKind::Subm3;
  std::vector<MapEntry> entries;
  std::vector<Coordinate> out_coords;

  friend bool operator==(const InOutMap&, const InOutMap&) = default;
};

/// Throws Error(MapInconsistent) on out-of-range indices or offset ids, or
/// duplicate triples.
void validate_map(const InOutMap& map, std::size_t input_count);

/// Index-order independent form of a map entry.
struct CoordTriple {
  Coordinate in;
  Coordinate out;
  std::uint8_t kernel_offset_id = 0;

  friend constexpr auto operator<=>(const CoordTriple&, const CoordTriple&) = default;
};

/// Sorted (input coordinate, output coordinate, tap) triples. Two maps over
/// the same input are set-equal iff their canonical triples are equal.
std::vector<CoordTriple> canonical_triples(const InOutMap& map,
                                           std::span<const Coordinate> in_coords);

/// Fraction of entries in each vertical partition: {center, mid, up, down}
/// (K=3 maps only; mid excludes the center tap).
struct PartitionShares {
  double center = 0;
  double mid = 0;
  double up = 0;
  double down = 0;
};
PartitionShares partition_shares(const InOutMap& map);

}  // namespace spocta

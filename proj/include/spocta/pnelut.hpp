#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "spocta/types.hpp"

namespace spocta {

struct NeighborDescriptor {
  Offset delta;
  std::uint8_t kernel_offset_id = 0;
};

/// Parallel neighbor-encoding table for one center parity. Row r holds the
/// Subm3 neighbors whose lowest octree digit is r, so one entry from every
/// row can be queried in the same cycle against eight distinct banks.
struct Pnelut {
  struct Row {
    std::array<NeighborDescriptor, 8> items{};
    std::uint8_t size = 0;
  };

  std::uint8_t center_parity = 0;
  std::array<Row, 8> rows{};

  std::size_t max_row_length() const noexcept;
  std::size_t total() const noexcept;
};

/// center_parity is the center's phi_1 = {z&1, y&1, x&1}.
Pnelut build_pnelut(std::uint8_t center_parity);

/// Prebuilt tables for all eight parities.
const Pnelut& pnelut_for(std::uint8_t center_parity);

}  // namespace spocta

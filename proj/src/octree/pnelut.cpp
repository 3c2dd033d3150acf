#include "spocta/pnelut.hpp"

#include <algorithm>

namespace spocta {

std::size_t Pnelut::max_row_length() const noexcept {
  std::size_t m = 0;
  for (const Row& r : rows) m = std::max<std::size_t>(m, r.size);
  return m;
}

std::size_t Pnelut::total() const noexcept {
  std::size_t n = 0;
  for (const Row& r : rows) n += r.size;
  return n;
}

Pnelut build_pnelut(std::uint8_t center_parity) {
  Pnelut lut;
  lut.center_parity = center_parity & 7u;
  const int px = lut.center_parity & 1, py = (lut.center_parity >> 1) & 1,
            pz = (lut.center_parity >> 2) & 1;
  const auto offsets = kernel_offsets(3);
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const Offset d = offsets[k];
    const unsigned row = (static_cast<unsigned>((pz + d.dz) & 1) << 2) |
                         (static_cast<unsigned>((py + d.dy) & 1) << 1) |
                         static_cast<unsigned>((px + d.dx) & 1);
    Pnelut::Row& r = lut.rows[row];
    r.items[r.size++] = NeighborDescriptor{d, static_cast<std::uint8_t>(k)};
  }
  return lut;
}

const Pnelut& pnelut_for(std::uint8_t center_parity) {
  static const std::array<Pnelut, 8> tables = [] {
    std::array<Pnelut, 8> t{};
    for (std::uint8_t p = 0; p < 8; ++p) t[p] = build_pnelut(p);
    return t;
  }();
  return tables[center_parity & 7u];
}

}  // namespace spocta

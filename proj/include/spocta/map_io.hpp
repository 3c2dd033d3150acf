#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "spocta/inout_map.hpp"

namespace spocta {

// Layout, little-endian:
//   "SPMP" | u16 version | u64 entry count | count x (u32 in, u32 out, u8 tap)
// Output coordinates are not stored; the reader supplies them.
inline constexpr std::uint16_t kMapFormatVersion = 1;

void write_map_entries(std::ostream& os, const std::vector<MapEntry>& entries);
std::vector<MapEntry> read_map_entries(std::istream& is);

void save_map(const std::filesystem::path& path, const InOutMap& map);
std::vector<MapEntry> load_map_entries(const std::filesystem::path& path);

}  // namespace spocta

#include "spocta/map_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "spocta/binary_io.hpp"
#include "spocta/error.hpp"

namespace spocta {

void write_map_entries(std::ostream& os, const std::vector<MapEntry>& entries) {
  os.write("SPMP", 4);
  binio::put<std::uint16_t>(os, kMapFormatVersion);
  binio::put<std::uint64_t>(os, entries.size());
  for (const MapEntry& e : entries) {
    binio::put<std::uint32_t>(os, e.in);
    binio::put<std::uint32_t>(os, e.out);
    binio::put<std::uint8_t>(os, e.kernel_offset_id);
  }
}

std::vector<MapEntry> read_map_entries(std::istream& is) {
  binio::expect_magic(is, "SPMP");
  const auto version = binio::get<std::uint16_t>(is, "map version");
  if (version != kMapFormatVersion) {
    throw Error(ErrorCode::FileFormat, "unsupported map version " + std::to_string(version) +
                                           " at byte offset 4");
  }
  const auto count = binio::get<std::uint64_t>(is, "map entry count");
  std::vector<MapEntry> entries;
  entries.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
  for (std::uint64_t i = 0; i < count; ++i) {
    MapEntry e;
    e.in = binio::get<std::uint32_t>(is, "map entry input index");
    e.out = binio::get<std::uint32_t>(is, "map entry output index");
    e.kernel_offset_id = binio::get<std::uint8_t>(is, "map entry offset id");
    entries.push_back(e);
  }
  return entries;
}

void save_map(const std::filesystem::path& path, const InOutMap& map) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  write_map_entries(os, map.entries);
  if (!os) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

std::vector<MapEntry> load_map_entries(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_map_entries(is);
}

}  // namespace spocta

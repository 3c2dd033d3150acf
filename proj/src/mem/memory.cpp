#include "spocta/memory.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "spocta/error.hpp"
#include "spocta/types.hpp"

namespace spocta {

std::string_view to_string(Partition p) {
  switch (p) {
    case Partition::Center: return "center";
    case Partition::Mid: return "mid";
    case Partition::Up: return "up";
    case Partition::Down: return "down";
  }
  return "unknown";
}

std::string_view to_string(CachePolicy p) {
  switch (p) {
    case CachePolicy::StaticResident: return "static";
    case CachePolicy::DirectMapped: return "direct";
    case CachePolicy::StreamThrough: return "stream";
  }
  return "unknown";
}

std::string_view to_string(Memory m) {
  switch (m) {
    case Memory::Weight: return "weight";
    case Memory::Ifmap: return "ifmap";
    case Memory::Psum: return "psum";
    case Memory::OctreeTable: return "octree_table";
    case Memory::MapTable: return "map_table";
  }
  return "unknown";
}

Partition classify_offset(std::uint8_t kernel_offset_id, int kernel) {
  if (kernel != 3) {
    throw Error(ErrorCode::InvalidOffset, "only kernel-3 taps are partitioned");
  }
  if (kernel_offset_id >= kernel_volume(3)) {
    throw Error(ErrorCode::InvalidOffset,
                "offset id " + std::to_string(kernel_offset_id) + " is outside the 3x3x3 kernel");
  }
  if (kernel_offset_id == kCenterOffsetId) return Partition::Center;
  const Offset d = offset_from_id(kernel_offset_id, 3);
  if (d.dz == 0) return Partition::Mid;
  return d.dz > 0 ? Partition::Up : Partition::Down;
}

std::size_t CacheConfig::total_capacity(std::size_t center_bytes) const noexcept {
  if (allocation == Allocation::Uniform) return uniform_capacity_bytes;
  std::size_t total = center_auto ? center_bytes : partitions[0].capacity_bytes;
  for (std::size_t p = 1; p < kPartitionCount; ++p) total += partitions[p].capacity_bytes;
  return total;
}

CacheConfig CacheConfig::non_uniform_for_total(std::size_t total, std::size_t center_bytes,
                                               std::size_t mid_bytes) {
  if (total < center_bytes) {
    throw Error(ErrorCode::ConfigInvalid, "total cache smaller than the center kernel slice");
  }
  CacheConfig c;
  c.center_auto = true;
  std::size_t rest = total - center_bytes;
  const std::size_t mid = std::min({rest, std::size_t{32768}, mid_bytes});
  rest -= mid;
  c[Partition::Mid] = {mid, CachePolicy::StaticResident};
  c[Partition::Up] = {rest - rest / 2, CachePolicy::DirectMapped};
  c[Partition::Down] = {rest / 2, CachePolicy::DirectMapped};
  return c;
}

CacheConfig CacheConfig::uniform(std::size_t total) {
  CacheConfig c;
  c.allocation = Allocation::Uniform;
  c.uniform_capacity_bytes = total;
  return c;
}

std::size_t LayerGeometry::line_bytes(std::size_t tile) const noexcept {
  const std::size_t first = tile * 16;
  const std::size_t width = first >= c_out ? 0 : std::min<std::size_t>(16, c_out - first);
  return width * c_in * bytes_per_weight;
}

std::size_t LayerGeometry::total_bytes() const noexcept {
  return kernel_volume(kernel) * tap_bytes();
}

void TrafficLedger::merge(const TrafficLedger& other) {
  dram_read_bytes += other.dram_read_bytes;
  dram_write_bytes += other.dram_write_bytes;
  for (std::size_t m = 0; m < kMemoryCount; ++m) {
    sram_read_bytes[m] += other.sram_read_bytes[m];
    sram_write_bytes[m] += other.sram_write_bytes[m];
  }
}

WeightCache::WeightCache(const CacheConfig& config, const LayerGeometry& geometry,
                         TrafficLedger* ledger)
    : config_(config), geometry_(geometry), ledger_(ledger) {
  if (geometry.kernel != 3) {
    streaming_ = true;
    return;
  }
  const std::size_t tiles = geometry.tiles();
  const std::size_t slices = kernel_volume(3) * tiles;
  resident_.assign(slices, 0);
  filled_.assign(slices, 0);

  if (config.allocation == Allocation::Uniform) {
    // Same number of tiles for every tap: tile-major, tap-minor.
    std::size_t used = 0;
    bool full = false;
    for (std::size_t t = 0; t < tiles && !full; ++t) {
      for (std::uint8_t k = 0; k < kernel_volume(3); ++k) {
        const std::size_t line = geometry.line_bytes(t);
        if (used + line > config.uniform_capacity_bytes) {
          full = true;
          break;
        }
        used += line;
        resident_[slice_index(k, static_cast<std::uint32_t>(t))] = 1;
        capacity_[static_cast<std::size_t>(classify_offset(k))] += line;
      }
    }
    return;
  }

  for (std::size_t p = 0; p < kPartitionCount; ++p) {
    capacity_[p] = config.partitions[p].capacity_bytes;
  }
  if (config.center_auto) capacity_[0] = geometry.tap_bytes();

  for (std::size_t p = 0; p < kPartitionCount; ++p) {
    const auto part = static_cast<Partition>(p);
    const CachePolicy policy = p == 0 && config.center_auto ? CachePolicy::StaticResident
                                                            : config.partitions[p].policy;
    if (policy == CachePolicy::StaticResident) {
      // A prefix of the partition's slices, so a larger capacity keeps a
      // superset resident.
      std::size_t used = 0;
      bool full = false;
      for (std::uint8_t k = 0; k < kernel_volume(3) && !full; ++k) {
        if (classify_offset(k) != part) continue;
        for (std::size_t t = 0; t < tiles; ++t) {
          const std::size_t line = geometry.line_bytes(t);
          if (used + line > capacity_[p]) {
            full = true;
            break;
          }
          used += line;
          resident_[slice_index(k, static_cast<std::uint32_t>(t))] = 1;
        }
      }
    } else if (policy == CachePolicy::DirectMapped) {
      const std::size_t lines = geometry.full_line_bytes() == 0
                                    ? 0
                                    : capacity_[p] / geometry.full_line_bytes();
      const std::size_t sets = lines == 0 ? 0 : std::bit_floor(lines);
      direct_[p].tags.assign(sets, ~std::uint64_t{0});
      direct_[p].mask = sets == 0 ? 0 : sets - 1;
    }
  }
}

void WeightCache::charge_miss(Partition p, std::size_t bytes) {
  PartitionStats& s = stats_[static_cast<std::size_t>(p)];
  ++s.accesses;
  ++s.misses;
  s.bytes_fetched += bytes;
  if (ledger_ != nullptr) {
    ledger_->dram_read_bytes += bytes;
    ledger_->sram_write(Memory::Weight, bytes);
    ledger_->sram_read(Memory::Weight, bytes);
  }
}

void WeightCache::charge_hit(Partition p) {
  ++stats_[static_cast<std::size_t>(p)].accesses;
  ++stats_[static_cast<std::size_t>(p)].hits;
}

AccessOutcome WeightCache::access(std::uint8_t kernel_offset_id, std::uint32_t cout_tile) {
  const std::size_t line = geometry_.line_bytes(cout_tile);
  if (streaming_) {
    ++stream_stats_.accesses;
    ++stream_stats_.misses;
    stream_stats_.bytes_fetched += line;
    if (ledger_ != nullptr) {
      ledger_->dram_read_bytes += line;
      ledger_->sram_write(Memory::Weight, line);
      ledger_->sram_read(Memory::Weight, line);
    }
    return AccessOutcome{false, line};
  }

  const Partition p = classify_offset(kernel_offset_id);
  const std::size_t slice = slice_index(kernel_offset_id, cout_tile);
  const std::size_t pi = static_cast<std::size_t>(p);
  CachePolicy policy = config_.partitions[pi].policy;
  if (config_.allocation == Allocation::Uniform || (pi == 0 && config_.center_auto)) {
    policy = CachePolicy::StaticResident;
  }

  bool hit = false;
  switch (policy) {
    case CachePolicy::StaticResident:
      if (resident_[slice]) {
        hit = filled_[slice] != 0;
        filled_[slice] = 1;
      }
      break;
    case CachePolicy::DirectMapped: {
      DirectMapped& dm = direct_[pi];
      if (!dm.tags.empty()) {
        std::uint64_t& tag = dm.tags[slice & dm.mask];
        hit = tag == slice;
        tag = slice;
      }
      break;
    }
    case CachePolicy::StreamThrough:
      break;
  }
  if (hit) {
    charge_hit(p);
    if (ledger_ != nullptr) ledger_->sram_read(Memory::Weight, line);
    return AccessOutcome{true, 0};
  }
  charge_miss(p, line);
  return AccessOutcome{false, line};
}

PartitionStats WeightCache::total() const {
  PartitionStats t = stream_stats_;
  for (const PartitionStats& s : stats_) t.merge(s);
  return t;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t memory_index(std::string_view name, std::size_t line_no) {
  for (std::size_t m = 0; m < kMemoryCount; ++m) {
    if (to_string(static_cast<Memory>(m)) == name) return m;
  }
  throw Error(ErrorCode::ConfigInvalid, "energy table line " + std::to_string(line_no) +
                                            ": unknown memory '" + std::string(name) + "'");
}

}  // namespace

EnergyTable EnergyTable::parse(std::string_view text) {
  EnergyTable t;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    auto fail = [&](const std::string& why) {
      return Error(ErrorCode::ConfigInvalid,
                   "energy table line " + std::to_string(line_no) + ": " + why);
    };
    if (eq == std::string_view::npos) throw fail("expected 'key = value'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view raw = trim(line.substr(eq + 1));
    double value = 0;
    const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
    if (ec != std::errc{} || ptr != raw.data() + raw.size()) {
      throw fail("value '" + std::string(raw) + "' is not a number");
    }
    if (!(value >= 0)) throw fail("energy costs must be non-negative");

    if (key == "dram.pj_per_bit") {
      t.dram_pj_per_bit = value;
      continue;
    }
    if (!key.starts_with("sram.")) throw fail("unknown key '" + std::string(key) + "'");
    const std::string_view rest = key.substr(5);
    const auto dot = rest.find('.');
    if (dot == std::string_view::npos) throw fail("unknown key '" + std::string(key) + "'");
    const std::size_t m = memory_index(rest.substr(0, dot), line_no);
    const std::string_view field = rest.substr(dot + 1);
    if (field == "pj_per_byte") {
      t.sram_read_pj_per_byte[m] = value;
      t.sram_write_pj_per_byte[m] = value;
    } else if (field == "read_pj_per_byte") {
      t.sram_read_pj_per_byte[m] = value;
    } else if (field == "write_pj_per_byte") {
      t.sram_write_pj_per_byte[m] = value;
    } else {
      throw fail("unknown key '" + std::string(key) + "'");
    }
  }
  return t;
}

EnergyTable EnergyTable::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::Io, "cannot open energy table " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  return parse(buf.str());
}

std::string EnergyTable::to_text() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "dram.pj_per_bit = " << dram_pj_per_bit << "\n";
  for (std::size_t m = 0; m < kMemoryCount; ++m) {
    const auto name = to_string(static_cast<Memory>(m));
    os << "sram." << name << ".read_pj_per_byte = " << sram_read_pj_per_byte[m] << "\n";
    os << "sram." << name << ".write_pj_per_byte = " << sram_write_pj_per_byte[m] << "\n";
  }
  return os.str();
}

EnergyBreakdown energy_report(const TrafficLedger& ledger, const EnergyTable& table) {
  EnergyBreakdown e;
  e.dram_read_pj = static_cast<double>(ledger.dram_read_bytes) * 8.0 * table.dram_pj_per_bit;
  e.dram_write_pj = static_cast<double>(ledger.dram_write_bytes) * 8.0 * table.dram_pj_per_bit;
  e.dram_pj = e.dram_read_pj + e.dram_write_pj;
  for (std::size_t m = 0; m < kMemoryCount; ++m) {
    e.sram_pj[m] = static_cast<double>(ledger.sram_read_bytes[m]) * table.sram_read_pj_per_byte[m] +
                   static_cast<double>(ledger.sram_write_bytes[m]) * table.sram_write_pj_per_byte[m];
    e.sram_pj_total += e.sram_pj[m];
  }
  e.total_pj = e.dram_pj + e.sram_pj_total;
  return e;
}

}  // namespace spocta

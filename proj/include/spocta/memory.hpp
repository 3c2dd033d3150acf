#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace spocta {

enum class Partition : std::uint8_t { Center, Mid, Up, Down };
inline constexpr std::size_t kPartitionCount = 4;
std::string_view to_string(Partition p);

/// Vertical partition of a K=3 tap. Throws Error(InvalidOffset) for K=2
/// layers or out-of-range ids.
Partition classify_offset(std::uint8_t kernel_offset_id, int kernel = 3);

enum class CachePolicy { StaticResident, DirectMapped, StreamThrough };
std::string_view to_string(CachePolicy p);

struct PartitionConfig {
  std::size_t capacity_bytes = 0;
  CachePolicy policy = CachePolicy::StaticResident;
};

enum class Allocation { NonUniform, Uniform };

/// Weight memory layout. In NonUniform mode each partition is managed on its
/// own; center may be sized automatically to hold all of W_center. In
/// Uniform mode one static pool of `uniform_capacity_bytes` holds the same
/// number of tiles for every tap.
struct CacheConfig {
  Allocation allocation = Allocation::NonUniform;
  std::array<PartitionConfig, kPartitionCount> partitions{{
      {0, CachePolicy::StaticResident},       // center (auto-sized)
      {32768, CachePolicy::StaticResident},   // mid
      {16384, CachePolicy::DirectMapped},     // up
      {16384, CachePolicy::DirectMapped},     // down
  }};
  bool center_auto = true;
  std::size_t uniform_capacity_bytes = 0;

  PartitionConfig& operator[](Partition p) { return partitions[static_cast<std::size_t>(p)]; }
  const PartitionConfig& operator[](Partition p) const {
    return partitions[static_cast<std::size_t>(p)];
  }

  /// Total bytes when applied to a layer (center resolved if auto).
  std::size_t total_capacity(std::size_t center_bytes) const noexcept;

  /// Non-uniform split of `total` bytes: center holds W_center, mid up to
  /// 32 KiB, the remainder shared by up and down.
  static CacheConfig non_uniform_for_total(std::size_t total, std::size_t center_bytes,
                                           std::size_t mid_bytes);
  static CacheConfig uniform(std::size_t total);
};

/// Weight geometry of one layer; a line is one (tap, 16-out-channel, full
/// C_in) slice.
struct LayerGeometry {
  int kernel = 3;
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  std::size_t bytes_per_weight = 1;

  std::size_t tiles() const noexcept { return (c_out + 15) / 16; }
  std::size_t line_bytes(std::size_t tile) const noexcept;
  std::size_t full_line_bytes() const noexcept { return 16 * c_in * bytes_per_weight; }
  std::size_t tap_bytes() const noexcept { return c_in * c_out * bytes_per_weight; }
  std::size_t total_bytes() const noexcept;
};

enum class Memory : std::uint8_t { Weight, Ifmap, Psum, OctreeTable, MapTable };
inline constexpr std::size_t kMemoryCount = 5;
std::string_view to_string(Memory m);

/// Traffic counters for one run. Energy is always recomputed from these.
struct TrafficLedger {
  std::uint64_t dram_read_bytes = 0;
  std::uint64_t dram_write_bytes = 0;
  std::array<std::uint64_t, kMemoryCount> sram_read_bytes{};
  std::array<std::uint64_t, kMemoryCount> sram_write_bytes{};

  void sram_read(Memory m, std::uint64_t bytes) { sram_read_bytes[static_cast<std::size_t>(m)] += bytes; }
  void sram_write(Memory m, std::uint64_t bytes) { sram_write_bytes[static_cast<std::size_t>(m)] += bytes; }
  void merge(const TrafficLedger& other);

  friend bool operator==(const TrafficLedger&, const TrafficLedger&) = default;
};

struct PartitionStats {
  std::uint64_t accesses = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t bytes_fetched = 0;

  void merge(const PartitionStats& o) {
    accesses += o.accesses;
    hits += o.hits;
    misses += o.misses;
    bytes_fetched += o.bytes_fetched;
  }
};

struct AccessOutcome {
  bool hit = false;
  std::size_t bytes_fetched = 0;
};

/// Weight fetcher model. Observational only: it counts traffic and decides
/// hits, nothing else.
///
/// Static-resident partitions keep the longest prefix of their slices in
/// (tap, tile) order at layer start and fill them on first use; other
/// slices stream. Direct-mapped partitions use a power-of-two set count so
/// that growing capacity refines the set mapping.
class WeightCache {
 public:
  /// K=2 layers bypass partitioning and stream every access.
  WeightCache(const CacheConfig& config, const LayerGeometry& geometry,
              TrafficLedger* ledger = nullptr);

  AccessOutcome access(std::uint8_t kernel_offset_id, std::uint32_t cout_tile);

  const PartitionStats& stats(Partition p) const { return stats_[static_cast<std::size_t>(p)]; }
  /// All accesses, including K=2 streaming.
  PartitionStats total() const;
  /// Bytes actually allocated to each partition for this layer.
  std::size_t capacity(Partition p) const { return capacity_[static_cast<std::size_t>(p)]; }

 private:
  struct DirectMapped {
    std::vector<std::uint64_t> tags;
    std::uint64_t mask = 0;
  };

  std::size_t slice_index(std::uint8_t k, std::uint32_t tile) const noexcept {
    return static_cast<std::size_t>(k) * geometry_.tiles() + tile;
  }
  void charge_miss(Partition p, std::size_t bytes);
  void charge_hit(Partition p);

  CacheConfig config_;
  LayerGeometry geometry_;
  TrafficLedger* ledger_;
  bool streaming_ = false;
  std::array<std::size_t, kPartitionCount> capacity_{};
  std::vector<std::uint8_t> resident_;  // per slice: chosen to stay on chip
  std::vector<std::uint8_t> filled_;    // per slice: already fetched
  std::array<DirectMapped, kPartitionCount> direct_{};
  std::array<PartitionStats, kPartitionCount> stats_{};
  PartitionStats stream_stats_{};
};

/// Per-access energy costs. DRAM defaults to 15 pJ/bit. SRAM numbers are
/// placeholders meant to be overridden from a table file.
struct EnergyTable {
  double dram_pj_per_bit = 15.0;
  std::array<double, kMemoryCount> sram_read_pj_per_byte{0.15, 0.15, 0.30, 0.10, 0.10};
  std::array<double, kMemoryCount> sram_write_pj_per_byte{0.15, 0.15, 0.30, 0.10, 0.10};

  /// Key-value text, one `key = value` per line, `#` comments. Keys:
  ///   dram.pj_per_bit
  ///   sram.<memory>.pj_per_byte        (sets read and write)
  ///   sram.<memory>.read_pj_per_byte
  ///   sram.<memory>.write_pj_per_byte
  /// with <memory> one of weight, ifmap, psum, octree_table, map_table.
  /// Throws Error(ConfigInvalid) with the line number on bad input.
  static EnergyTable parse(std::string_view text);
  static EnergyTable load(const std::filesystem::path& path);
  std::string to_text() const;
};

struct EnergyBreakdown {
  double dram_read_pj = 0;
  double dram_write_pj = 0;
  std::array<double, kMemoryCount> sram_pj{};
  double dram_pj = 0;
  double sram_pj_total = 0;
  double total_pj = 0;
};

EnergyBreakdown energy_report(const TrafficLedger& ledger, const EnergyTable& table);

}  // namespace spocta

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spocta/memory.hpp"
#include "spocta/search.hpp"

namespace spocta {

enum class SearchMode { Parallel, Serial, Hash };
enum class PipelineMode { FineGrained, CoarseGrained };
/// How the gather unit packs non-zero activations into the 16 input lanes.
enum class Granularity { Bit, Group };

struct PipelineConfig {
  unsigned fifo_count = 8;
  unsigned fifo_depth = 16;
  unsigned query_banks = 8;
  unsigned pe_in_lanes = 16;
  unsigned pe_out_lanes = 16;
  unsigned filter_writes_per_cycle = 8;
  unsigned cross_block_penalty = 4;   // cycles per query batch touching another block
  unsigned hash_cycles_per_query = 1; // hash-baseline address computation
  PipelineMode mode = PipelineMode::FineGrained;
  bool overlap_table_build = true;
  double clock_hz = 400e6;
  double dram_bytes_per_second = 16e9;

  /// Throws Error(ConfigInvalid).
  void validate() const;
  std::size_t fifo_capacity() const noexcept { return std::size_t{fifo_count} * fifo_depth; }
  double dram_bytes_per_cycle() const noexcept { return dram_bytes_per_second / clock_hz; }
  /// Cycles to move `bytes` over the DRAM interface, rounded up.
  std::uint64_t dram_cycles(std::uint64_t bytes) const noexcept;
};

struct SearchCycles {
  std::uint64_t build = 0;
  std::uint64_t query = 0;
  std::uint64_t penalty = 0;
  std::uint64_t total = 0;
};

/// Search-core timing over a traced map search.
///   Parallel: 8 cycles per Subm3 voxel, 1 per Gconv2 voxel, plus the
///             cross-block penalty for every query batch that left the block.
///   Serial:   one cycle per candidate query, penalty per cross-block query.
///   Hash:     hash_cycles_per_query + probes for each candidate query; the
///             table build pays the same per insert.
/// Table build costs 1 cycle per voxel in the table-aided modes. Gconv3
/// charges 1 cycle per input voxel; Tconv2 charges the DRAM reload of its map.
SearchCycles simulate_search(const SearchTrace& trace, SearchMode mode,
                             const PipelineConfig& cfg = {});

/// Per-map-entry PE-array cycles:
///   sparse: ceil(nnz / 16) * ceil(C_out / 16)     (Bit granularity)
///           nonzero_groups * ceil(C_out / 16)     (Group granularity)
///   dense:  ceil(C_in / 16) * ceil(C_out / 16)
struct ComputeCycles {
  std::vector<std::uint32_t> per_entry;
  std::uint64_t total = 0;
};

ComputeCycles simulate_compute(std::span<const std::uint16_t> entry_nnz,
                               std::span<const std::uint16_t> entry_nnz_groups,
                               std::size_t c_in, std::size_t c_out, bool sparse,
                               Granularity granularity = Granularity::Bit,
                               const PipelineConfig& cfg = {});

/// One producer step of the search core: `cycles` of query work that yields
/// `entries` map entries, not starting before `not_before`.
struct SearchStep {
  std::uint32_t cycles = 0;
  std::uint32_t entries = 0;
  std::uint64_t not_before = 0;
};

/// Converts a search trace into producer steps: per-voxel query work plus
/// stage-1 table builds, either overlapped with earlier blocks' queries or
/// serialized in front of each block.
std::vector<SearchStep> search_schedule(const SearchTrace& trace, const PipelineConfig& cfg);

struct PipelineTiming {
  std::uint64_t search_only = 0;
  std::uint64_t compute_only = 0;
  std::uint64_t fine_total = 0;
  std::uint64_t coarse_total = 0;
  std::uint64_t total = 0;   // the configured mode
  std::uint64_t overlap = 0; // search_only + compute_only - total
  std::uint64_t stall_map_full = 0;
  std::uint64_t stall_map_empty = 0;

  void accumulate(const PipelineTiming& other);
};

/// Replays search steps (producer) against per-entry compute cycles
/// (consumer) through the FIFO map table. Entries are consumed in production
/// order. Throws Error(ConfigInvalid) for a bad config and
/// Error(MapInconsistent) when step entries and compute entries disagree.
PipelineTiming simulate_pipeline(std::span<const SearchStep> steps,
                                 std::span<const std::uint32_t> entry_cycles,
                                 const PipelineConfig& cfg);

struct LayerSimReport {
  std::size_t layer_id = 0;
  OpKind op = OpKind::Subm3;
  std::size_t voxels_in = 0;
  std::size_t voxels_out = 0;
  std::size_t entries = 0;
  PipelineTiming timing;
  SearchCycles search_parallel;
  SearchCycles search_serial;
  std::optional<SearchCycles> search_hash;
  std::uint64_t compute_sparse = 0;
  std::uint64_t compute_dense = 0;
  std::uint64_t weight_stall_cycles = 0;
  std::array<PartitionStats, kPartitionCount> weight_cache{};
  PartitionStats weight_stream{};
  double input_density = 0;
  TrafficLedger ledger;
};

struct SimReport {
  PipelineMode mode = PipelineMode::FineGrained;
  bool sparse_compute = true;
  std::vector<LayerSimReport> layers;
  PipelineTiming totals;
  double search_speedup_parallel_vs_serial = 0;
  double search_speedup_parallel_vs_hash = 0;
  double compute_speedup_sparse_vs_dense = 0;
  double pipeline_speedup_fine_vs_coarse = 0;
  TrafficLedger ledger;

  /// Sums layers into totals, ledger and speedups.
  void finalize();
};

}  // namespace spocta

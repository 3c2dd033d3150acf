#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spocta/inout_map.hpp"
#include "spocta/types.hpp"

namespace spocta {

/// What the search core did for one traversed voxel.
struct VoxelQueryRecord {
  std::uint32_t voxel = 0;          // input index
  std::uint32_t block = 0;          // block ordinal in traversal order
  std::uint8_t query_cycles = 0;    // PNELUT iterations (8 Subm3, 1 Gconv2)
  std::uint8_t candidates = 0;      // in-grid candidate coordinates queried
  std::uint8_t cross_block = 0;     // candidates routed to another block's table
  std::uint8_t cross_block_batches = 0;  // query cycles that touched another block
  std::uint8_t hits = 0;            // map entries produced for this voxel
};

struct SearchTrace {
  OpKind op = OpKind::Subm3;
  std::vector<VoxelQueryRecord> voxels;  // traversal order; hits concatenate to map order
  std::vector<std::uint32_t> block_sizes;  // voxels inserted per block, traversal order
  std::size_t query_batches = 0;
  std::size_t bank_conflicts = 0;
  // Hash baseline only: probes per traversed voxel and total insert probes.
  std::vector<std::uint32_t> hash_probes;
  std::uint64_t hash_insert_probes = 0;
};

struct SearchResult {
  InOutMap map;
  SearchTrace trace;
};

/// Two-stage table-aided Subm3 search. Stage 1 builds an octree table for
/// every occupied 16^3 block; stage 2 walks voxels in Morton order and, for
/// each center, issues up to 8 conflict-free query batches driven by the
/// center's PNELUT. Queries leaving the center's block are routed to the
/// neighbor block's table. out_coords equals the input coordinate sequence.
SearchResult search_subm3(std::span<const Coordinate> coords);

/// Kernel 2 / stride 2 search. Each parent site is resolved with one
/// 8-bank read at the shared address of its children. out_coords are the
/// unique parents in Morton order; the tap id equals the child's phi_1.
SearchResult search_gconv2(std::span<const Coordinate> coords);

/// Kernel 3 / stride 2 map built by direct scatter from each input voxel
/// (input-stationary). out_coords are the reachable sites in Morton order.
SearchResult search_gconv3(std::span<const Coordinate> coords);

/// Swaps input and output roles of a stride-2 kernel-2 map. `target_coords`
/// become the result's out_coords: the original Gconv2 input when turning a
/// Gconv2 map into a Tconv2 map, and the coarse sites when going back.
/// Throws Error(MapMismatch) if any entry disagrees with the coordinates.
InOutMap transpose_map(const InOutMap& map, std::span<const Coordinate> target_coords);

/// Trace for a Tconv2 layer whose map is reloaded from external memory:
/// one record per input row, entries grouped in map order.
SearchTrace reload_trace(const InOutMap& tconv_map, std::size_t input_count);

/// Exhaustive enumeration through sorted-coordinate lookups; no octree or
/// hash structures. Entries are sorted by (out, tap, in). For Tconv2 the
/// coarse input is `coords` and the fine output sites are `tconv_targets`.
InOutMap search_bruteforce(std::span<const Coordinate> coords, OpKind op,
                           std::span<const Coordinate> tconv_targets = {});

/// Baseline using an open-addressing hash table keyed by the packed 48-bit
/// coordinate. Queries are serial; the trace records probe counts.
/// Supports Subm3, Gconv2 and Gconv3.
SearchResult search_hash(std::span<const Coordinate> coords, OpKind op);

}  // namespace spocta

#pragma once

#include <filesystem>
#include <vector>

#include "spocta/cli/report.hpp"
#include "spocta/cli/runner.hpp"

namespace spocta {

/// Applies a flat JSON object of knobs to `options`. Keys:
///   pipeline: fifo_count fifo_depth query_banks pe_in_lanes pe_out_lanes
///             filter_writes_per_cycle cross_block_penalty hash_cycles_per_query
///             pipeline ("fine" | "coarse") overlap_table_build clock_hz
///             dram_bytes_per_second
///   compute:  sparse_compute granularity ("bit" | "group") hash_baseline
///   cache:    allocation ("non-uniform" | "uniform") cache_total_bytes
///             center_bytes (0 = auto) mid_bytes up_bytes down_bytes uniform_bytes
/// Throws Error(ConfigInvalid) naming the key on unknown keys or bad values.
void apply_config(RunOptions& options, const Json& flat);

/// Reads a JSON object from disk; syntax errors report the byte position.
Json load_json_file(const std::filesystem::path& path);

/// Expands a sweep spec into configuration points. The spec holds either
/// "points" (a list of flat knob objects) or "grid" (knob -> list of values,
/// expanded as a cartesian product with the last key varying fastest), or
/// both, points first. An empty object yields no points.
std::vector<Json> expand_sweep(const Json& spec);

}  // namespace spocta

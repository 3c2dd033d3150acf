#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spocta/cli/network.hpp"
#include "spocta/exec.hpp"
#include "spocta/memory.hpp"
#include "spocta/search.hpp"
#include "spocta/sim.hpp"

namespace spocta {

struct RunOptions {
  bool oracle = false;
  bool sparse_compute = true;
  bool hash_baseline = true;
  Granularity granularity = Granularity::Bit;
  unsigned threads = 1;
  PipelineConfig pipeline;
  CacheConfig cache;
  /// When set, each layer's cache is this many bytes split per `cache.allocation`.
  std::optional<std::size_t> cache_total_bytes;
  EnergyTable energy;
};

/// Everything the timing replay needs from one functional layer.
struct LayerTrace {
  std::size_t layer_id = 0;
  OpKind op = OpKind::Subm3;
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  std::size_t bytes_per_value = 1;
  std::size_t voxels_in = 0;
  std::size_t voxels_out = 0;
  SearchTrace search;
  std::optional<SearchTrace> hash_search;
  std::vector<std::uint8_t> entry_taps;  // map order
  std::vector<std::uint16_t> entry_nnz;
  std::vector<std::uint16_t> entry_nnz_groups;
  std::uint64_t candidates = 0;
  double input_density = 0;
  bool exports_map = false;  // a later Tconv2 reloads this layer's map
};

template <typename T>
struct ForwardResult {
  SparseTensor<T> output;
  std::vector<LayerTrace> layers;
};

/// Functional pass: map search and execution per layer. With
/// `options.oracle` every map is checked against brute force and every
/// output against the dense oracle (float, grids up to 64 per axis) or the
/// direct reference. Throws Error(OracleMismatch) on disagreement.
template <typename T>
ForwardResult<T> run_forward(const SparseTensor<T>& input, const Network<T>& net,
                             const RunOptions& options);

/// Timing and traffic replay of recorded layer traces.
SimReport model_run(const std::vector<LayerTrace>& layers, const RunOptions& options);

/// Compares two tensors as coordinate-keyed row sets; float rows within
/// |a - b| <= 1e-4 * max(1, |b|). Returns a description of the first
/// difference, or nothing when they agree.
template <typename T>
std::optional<std::string> compare_tensors(const SparseTensor<T>& got, const SparseTensor<T>& want);

}  // namespace spocta

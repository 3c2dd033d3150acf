#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "spocta/inout_map.hpp"
#include "spocta/layer.hpp"
#include "spocta/tensor.hpp"

namespace spocta {

enum class Dataflow { Auto, OutputStationary, InputStationary };

/// Output-stationary for Subm3/Gconv2, input-stationary for Gconv3/Tconv2.
Dataflow default_dataflow(OpKind op) noexcept;

/// One weight-slice read: kernel tap x 16-output-channel tile.
struct WeightAccess {
  std::uint32_t entry = 0;
  std::uint8_t kernel_offset_id = 0;
  std::uint32_t cout_tile = 0;
};

struct ExecOptions {
  bool sparse_gather = true;
  Dataflow dataflow = Dataflow::Auto;
  unsigned threads = 1;
  /// Called for every weight access in map-entry order, tile-minor, after the
  /// arithmetic is done. Observers cannot alter results.
  std::function<void(const WeightAccess&)> on_weight_access;
};

struct ExecStats {
  Dataflow dataflow = Dataflow::Auto;
  /// Per map entry: non-zero input channels and non-zero 16-channel groups
  /// of the gathered input row.
  std::vector<std::uint16_t> entry_nnz;
  std::vector<std::uint16_t> entry_nnz_groups;
  /// Per map entry: how many times it was accumulated (1 when complete).
  std::vector<std::uint32_t> entry_visits;
  std::uint64_t macs = 0;
  std::uint64_t rows_emitted = 0;
};

/// Gather / multiply / scatter over the map, then the postprocess chain.
/// Output rows follow map.out_coords. float runs in reference mode with float
/// accumulators; int8 runs with int32 accumulators.
///
/// Throws Error(ChannelMismatch) on channel/weight shape disagreement,
/// Error(MapInconsistent) when the map does not fit the input or layer, and
/// Error(ConfigInvalid) when int8 accumulation could overflow.
template <typename T>
SparseTensor<T> execute_layer(const SparseTensor<T>& input, const WeightTensor<T>& w,
                              const InOutMap& map, const LayerSpec& spec,
                              const ExecOptions& options = {}, ExecStats* stats = nullptr);

inline std::size_t cout_tiles(std::size_t c_out) noexcept { return (c_out + 15) / 16; }

}  // namespace spocta

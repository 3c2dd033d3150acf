#pragma once

#include <cstdint>
#include <span>

#include "spocta/layer.hpp"
#include "spocta/tensor.hpp"

namespace spocta {

inline constexpr std::uint16_t kOracleMaxExtent = 64;

/// Ground-truth convolution in reference mode: densify onto the grid, run a
/// dense strided 3D convolution, then re-sparsify.
///
/// Output order: Subm3 keeps the input order; Gconv3/Gconv2 list active sites
/// in (x, y, z) lexicographic order; Tconv2 emits exactly `transposed_sites`
/// (the fine coordinates of the paired Gconv2 input) in the given order.
/// Postprocessing is applied to every output row.
///
/// Throws GridTooLarge when any extent component exceeds 64 or an input
/// coordinate falls outside the extent, and UnsupportedOp for a Tconv2 call
/// without target sites.
FloatTensor dense_oracle_conv(const FloatTensor& t, const WeightTensor<float>& w,
                              const LayerSpec& spec, Coordinate grid_extent,
                              std::span<const Coordinate> transposed_sites = {});

/// Direct per-site convolution driven by coordinate lookups, with no grid
/// limit. Works in both modes (int32 accumulators for int8). Output order
/// follows dense_oracle_conv.
template <typename T>
SparseTensor<T> direct_conv_reference(const SparseTensor<T>& t, const WeightTensor<T>& w,
                                      const LayerSpec& spec,
                                      std::span<const Coordinate> transposed_sites = {});

}  // namespace spocta

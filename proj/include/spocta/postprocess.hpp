#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spocta/layer.hpp"

namespace spocta {

/// Reference mode. Requantize rescales by the multiplier without rounding.
std::vector<float> postprocess(std::span<const float> row, std::span<const PostOp> chain,
                               const QuantParams& q);

/// Quantized mode. Values are carried as float through the chain; requantize
/// multiplies by the multiplier, rounds half to even and saturates to int8.
/// The result is rounded half to even and saturated once more at the end.
std::vector<std::int8_t> postprocess(std::span<const std::int32_t> row,
                                     std::span<const PostOp> chain, const QuantParams& q);

inline std::vector<float> postprocess(std::span<const float> row, const LayerSpec& spec) {
  return postprocess(row, spec.postprocess, spec.quant);
}
inline std::vector<std::int8_t> postprocess(std::span<const std::int32_t> row,
                                            const LayerSpec& spec) {
  return postprocess(row, spec.postprocess, spec.quant);
}

/// Round half to even, then clamp to [-128, 127].
std::int8_t saturate_int8(float v) noexcept;

}  // namespace spocta

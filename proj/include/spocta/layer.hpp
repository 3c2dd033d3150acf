#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "spocta/types.hpp"

namespace spocta {

struct QuantParams {
  float input_scale = 1.0f;
  float output_scale = 1.0f;
  float weight_scale = 1.0f;

  /// Factor mapping accumulator units to output units.
  float requant_multiplier() const noexcept {
    return input_scale * weight_scale / output_scale;
  }

  friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

struct PostOp {
  enum class Kind { BatchNorm, Relu, Requantize };

  Kind kind = Kind::Relu;
  // BatchNorm only: y = scale[c] * x + shift[c].
  std::vector<float> scale;
  std::vector<float> shift;

  static PostOp relu() { return PostOp{Kind::Relu, {}, {}}; }
  static PostOp requantize() { return PostOp{Kind::Requantize, {}, {}}; }
  static PostOp batch_norm(std::vector<float> scale, std::vector<float> shift) {
    return PostOp{Kind::BatchNorm, std::move(scale), std::move(shift)};
  }

  friend bool operator==(const PostOp&, const PostOp&) = default;
};

struct LayerSpec {
  OpKind op = OpKind::Subm3;
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  std::vector<PostOp> postprocess;
  QuantParams quant;
  std::optional<std::size_t> paired_layer;  // Tconv2: the Gconv2 whose map it reuses

  int kernel() const noexcept { return kernel_size(op); }
  int stride() const noexcept { return stride_of(op); }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Throws Error(InvalidLayer) or Error(ConfigInvalid).
void validate_layer(const LayerSpec& spec);

}  // namespace spocta

#include "spocta/postprocess.hpp"

#include <algorithm>
#include <cmath>

namespace spocta {

std::int8_t saturate_int8(float v) noexcept {
  // nearbyint honours the default round-to-nearest-even mode.
  const float r = std::nearbyint(v);
  return static_cast<std::int8_t>(std::clamp(r, -128.0f, 127.0f));
}

namespace {

void apply_chain(std::vector<float>& v, std::span<const PostOp> chain, const QuantParams& q,
                 bool quantized) {
  const float multiplier = q.requant_multiplier();
  for (const PostOp& op : chain) {
    switch (op.kind) {
      case PostOp::Kind::BatchNorm:
        for (std::size_t c = 0; c < v.size(); ++c) v[c] = op.scale[c] * v[c] + op.shift[c];
        break;
      case PostOp::Kind::Relu:
        for (float& x : v) x = std::max(x, 0.0f);
        break;
      case PostOp::Kind::Requantize:
        for (float& x : v) {
          x *= multiplier;
          if (quantized) x = saturate_int8(x);
        }
        break;
    }
  }
}

}  // namespace

std::vector<float> postprocess(std::span<const float> row, std::span<const PostOp> chain,
                               const QuantParams& q) {
  std::vector<float> v(row.begin(), row.end());
  apply_chain(v, chain, q, false);
  return v;
}

std::vector<std::int8_t> postprocess(std::span<const std::int32_t> row,
                                     std::span<const PostOp> chain, const QuantParams& q) {
  std::vector<float> v(row.size());
  for (std::size_t c = 0; c < row.size(); ++c) v[c] = static_cast<float>(row[c]);
  apply_chain(v, chain, q, true);
  std::vector<std::int8_t> out(v.size());
  for (std::size_t c = 0; c < v.size(); ++c) out[c] = saturate_int8(v[c]);
  return out;
}

}  // namespace spocta

#include "spocta/types.hpp"

#include <algorithm>
#include <cctype>
#include <string>
#include <unordered_map>

#include "spocta/error.hpp"
#include "spocta/layer.hpp"
#include "spocta/tensor.hpp"

namespace spocta {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateCoordinate: return "DuplicateCoordinate";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::GridTooLarge: return "GridTooLarge";
    case ErrorCode::UnsupportedOp: return "UnsupportedOp";
    case ErrorCode::CoordinateOutOfRange: return "CoordinateOutOfRange";
    case ErrorCode::MapMismatch: return "MapMismatch";
    case ErrorCode::MapInconsistent: return "MapInconsistent";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::InvalidOffset: return "InvalidOffset";
    case ErrorCode::InvalidLayer: return "InvalidLayer";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::BadDensity: return "BadDensity";
    case ErrorCode::FileFormat: return "FileFormat";
    case ErrorCode::Io: return "Io";
    case ErrorCode::OracleMismatch: return "OracleMismatch";
  }
  return "Unknown";
}

DuplicateCoordinateError::DuplicateCoordinateError(std::size_t first, std::size_t second)
    : Error(ErrorCode::DuplicateCoordinate, "duplicate coordinate at indices " +
                                                std::to_string(first) + " and " +
                                                std::to_string(second)),
      first_(first),
      second_(second) {}

std::string_view to_string(OpKind op) {
  switch (op) {
    case OpKind::Subm3: return "subm3";
    case OpKind::Gconv3: return "gconv3";
    case OpKind::Gconv2: return "gconv2";
    case OpKind::Tconv2: return "tconv2";
  }
  return "unknown";
}

OpKind parse_op_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "subm3") return OpKind::Subm3;
  if (lower == "gconv3") return OpKind::Gconv3;
  if (lower == "gconv2") return OpKind::Gconv2;
  if (lower == "tconv2") return OpKind::Tconv2;
  throw Error(ErrorCode::UnsupportedOp, "unknown operator kind '" + std::string(text) + "'");
}

std::vector<Offset> kernel_offsets(int kernel) {
  if (kernel != 2 && kernel != 3) {
    throw Error(ErrorCode::UnsupportedOp, "kernel size must be 2 or 3");
  }
  std::vector<Offset> out;
  out.reserve(kernel_volume(kernel));
  for (std::size_t id = 0; id < kernel_volume(kernel); ++id) {
    out.push_back(offset_from_id(static_cast<std::uint8_t>(id), kernel));
  }
  return out;
}

void check_unique(std::span<const Coordinate> coords) {
  std::unordered_map<Coordinate, std::size_t, CoordinateHash> seen;
  seen.reserve(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    auto [it, inserted] = seen.emplace(coords[i], i);
    if (!inserted) throw DuplicateCoordinateError(it->second, i);
  }
}

template <typename T>
void validate_tensor(const SparseTensor<T>& t) {
  if (t.channels == 0) {
    throw Error(ErrorCode::ShapeMismatch, "channel count must be positive");
  }
  if (t.features.size() != t.coords.size() * t.channels) {
    throw Error(ErrorCode::ShapeMismatch,
                "feature matrix has " + std::to_string(t.features.size()) + " values, expected " +
                    std::to_string(t.coords.size()) + " rows x " + std::to_string(t.channels));
  }
  check_unique(t.coords);
}

template void validate_tensor(const SparseTensor<float>&);
template void validate_tensor(const SparseTensor<std::int8_t>&);

template <typename T>
void validate_weights(const WeightTensor<T>& w) {
  if (w.kernel != 2 && w.kernel != 3) {
    throw Error(ErrorCode::ShapeMismatch, "kernel size must be 2 or 3");
  }
  if (w.c_in == 0 || w.c_out == 0) {
    throw Error(ErrorCode::ShapeMismatch, "weight channel counts must be positive");
  }
  if (w.values.size() != w.c_out * w.c_in * w.volume()) {
    throw Error(ErrorCode::ShapeMismatch, "weight tensor holds " +
                                              std::to_string(w.values.size()) + " values, expected " +
                                              std::to_string(w.c_out * w.c_in * w.volume()));
  }
  if (w.zero_point != 0) {
    throw Error(ErrorCode::ShapeMismatch, "symmetric quantization requires zero_point 0");
  }
  if (!(w.scale > 0.0f)) {
    throw Error(ErrorCode::ShapeMismatch, "weight scale must be positive");
  }
}

template void validate_weights(const WeightTensor<float>&);
template void validate_weights(const WeightTensor<std::int8_t>&);

void validate_layer(const LayerSpec& spec) {
  if (spec.c_in == 0 || spec.c_out == 0) {
    throw Error(ErrorCode::InvalidLayer, "layer channel counts must be positive");
  }
  if (!(spec.quant.input_scale > 0.0f) || !(spec.quant.output_scale > 0.0f) ||
      !(spec.quant.weight_scale > 0.0f)) {
    throw Error(ErrorCode::InvalidLayer, "quantization scales must be strictly positive");
  }
  if (spec.op == OpKind::Tconv2 && !spec.paired_layer) {
    throw Error(ErrorCode::InvalidLayer, "tconv2 layer must reference a prior gconv2 layer");
  }
  if (spec.op != OpKind::Tconv2 && spec.paired_layer) {
    throw Error(ErrorCode::InvalidLayer, "only tconv2 layers may reference a paired layer");
  }
  for (const PostOp& p : spec.postprocess) {
    if (p.kind == PostOp::Kind::BatchNorm &&
        (p.scale.size() != spec.c_out || p.shift.size() != spec.c_out)) {
      throw Error(ErrorCode::InvalidLayer, "batch-norm parameters must have c_out entries");
    }
  }
}

}  // namespace spocta

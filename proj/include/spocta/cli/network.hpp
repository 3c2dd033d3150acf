#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spocta/cli/scene_file.hpp"
#include "spocta/layer.hpp"
#include "spocta/tensor.hpp"

namespace spocta {

template <typename T>
struct NetworkLayer {
  LayerSpec spec;
  WeightTensor<T> weights;

  friend bool operator==(const NetworkLayer&, const NetworkLayer&) = default;
};

template <typename T>
struct Network {
  std::vector<NetworkLayer<T>> layers;

  friend bool operator==(const Network&, const Network&) = default;
};

using FloatNetwork = Network<float>;
using QuantNetwork = Network<std::int8_t>;
using AnyNetwork = std::variant<QuantNetwork, FloatNetwork>;

/// Channel chaining, per-layer validity, Tconv2 pairing with an earlier Gconv2.
template <typename T>
void validate_network(const Network<T>& net);

// A network is a JSON description plus an "SPWT" weight file:
//   "SPWT" | u16 version | u8 dtype | u64 payload bytes | payload
// Each layer's weights start at its weight_offset (bytes into the payload),
// laid out [c_out][c_in][K^3].
inline constexpr std::uint16_t kWeightFormatVersion = 1;

/// Writes `json_path` and the weight file next to it (same stem, .spwt).
void save_network(const std::filesystem::path& json_path, const AnyNetwork& net);
/// JSON errors report line and column; weight errors report byte offsets.
AnyNetwork load_network(const std::filesystem::path& json_path);

enum class NetworkPreset { Identity, UNet, Down3 };
NetworkPreset parse_preset(std::string_view text);

/// Small deterministic topologies with seeded weights.
///   identity: one Subm3 layer with an identity center tap
///   unet:     subm3, gconv2 (x2 channels), subm3, tconv2, subm3
///   down3:    subm3, gconv3, subm3
AnyNetwork make_network(NetworkPreset preset, std::size_t channels, Dtype dtype,
                        std::uint64_t seed);

}  // namespace spocta

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <variant>

#include "spocta/tensor.hpp"

namespace spocta {

enum class Dtype : std::uint8_t { Int8 = 0, Float32 = 1 };
std::string_view to_string(Dtype d);
Dtype parse_dtype(std::string_view text);

/// A voxel scene: the tensor plus the grid extent its coordinates live in.
struct Scene {
  Coordinate extent;
  std::variant<QuantTensor, FloatTensor> tensor;

  Dtype dtype() const noexcept { return tensor.index() == 0 ? Dtype::Int8 : Dtype::Float32; }
  std::span<const Coordinate> coords() const;
  std::size_t channels() const;
};

// Layout, little-endian:
//   "SPVX" | u16 version | u64 N | u16 C | u16 extent x, y, z | u8 dtype (0 int8, 1 f32)
//   N x (u16 x, u16 y, u16 z, C feature values)
inline constexpr std::uint16_t kSceneFormatVersion = 1;

void write_scene(std::ostream& os, const Scene& scene);
/// Validates extents and duplicates; errors carry the byte offset.
Scene read_scene(std::istream& is);

void save_scene(const std::filesystem::path& path, const Scene& scene);
Scene load_scene(const std::filesystem::path& path);

}  // namespace spocta

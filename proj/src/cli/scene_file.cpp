#include "spocta/cli/scene_file.hpp"

#include <fstream>
#include <string>
#include <unordered_map>

#include "spocta/binary_io.hpp"
#include "spocta/error.hpp"

namespace spocta {

std::string_view to_string(Dtype d) { return d == Dtype::Int8 ? "int8" : "float32"; }

Dtype parse_dtype(std::string_view text) {
  if (text == "int8") return Dtype::Int8;
  if (text == "float32" || text == "f32") return Dtype::Float32;
  throw Error(ErrorCode::ConfigInvalid, "unknown dtype '" + std::string(text) + "'");
}

std::span<const Coordinate> Scene::coords() const {
  return std::visit([](const auto& t) { return std::span<const Coordinate>(t.coords); }, tensor);
}

std::size_t Scene::channels() const {
  return std::visit([](const auto& t) { return t.channels; }, tensor);
}

void write_scene(std::ostream& os, const Scene& scene) {
  os.write("SPVX", 4);
  binio::put<std::uint16_t>(os, kSceneFormatVersion);
  const auto coords = scene.coords();
  binio::put<std::uint64_t>(os, coords.size());
  binio::put<std::uint16_t>(os, static_cast<std::uint16_t>(scene.channels()));
  binio::put<std::uint16_t>(os, scene.extent.x);
  binio::put<std::uint16_t>(os, scene.extent.y);
  binio::put<std::uint16_t>(os, scene.extent.z);
  binio::put<std::uint8_t>(os, static_cast<std::uint8_t>(scene.dtype()));
  std::visit(
      [&](const auto& t) {
        for (std::size_t v = 0; v < t.size(); ++v) {
          binio::put<std::uint16_t>(os, t.coords[v].x);
          binio::put<std::uint16_t>(os, t.coords[v].y);
          binio::put<std::uint16_t>(os, t.coords[v].z);
          for (const auto f : t.row(v)) binio::put(os, f);
        }
      },
      scene.tensor);
}

namespace {

template <typename T>
SparseTensor<T> read_records(std::istream& is, std::uint64_t n, std::size_t channels, Coordinate extent) {
  SparseTensor<T> t;
  t.channels = channels;
  const auto reserve = static_cast<std::size_t>(std::min<std::uint64_t>(n, 1u << 20));
  t.coords.reserve(reserve);
  t.features.reserve(reserve * channels);
  std::unordered_map<Coordinate, std::size_t, CoordinateHash> seen;
  for (std::uint64_t v = 0; v < n; ++v) {
    const auto offset = static_cast<long long>(is.tellg());
    Coordinate c;
    c.x = binio::get<std::uint16_t>(is, "voxel x");
    c.y = binio::get<std::uint16_t>(is, "voxel y");
    c.z = binio::get<std::uint16_t>(is, "voxel z");
    if (c.x >= extent.x || c.y >= extent.y || c.z >= extent.z) {
      throw Error(ErrorCode::CoordinateOutOfRange,
                  "voxel " + std::to_string(v) + " at byte offset " + std::to_string(offset) +
                      " lies outside the declared extent");
    }
    const auto [it, fresh] = seen.emplace(c, static_cast<std::size_t>(v));
    if (!fresh) throw DuplicateCoordinateError(it->second, static_cast<std::size_t>(v));
    t.coords.push_back(c);
    for (std::size_t ch = 0; ch < channels; ++ch) t.features.push_back(binio::get<T>(is, "feature value"));
  }
  return t;
}

}  // namespace

Scene read_scene(std::istream& is) {
  binio::expect_magic(is, "SPVX");
  const auto version = binio::get<std::uint16_t>(is, "scene version");
  if (version != kSceneFormatVersion) {
    throw Error(ErrorCode::FileFormat,
                "unsupported scene version " + std::to_string(version) + " at byte offset 4");
  }
  const auto n = binio::get<std::uint64_t>(is, "voxel count");
  const auto channels = binio::get<std::uint16_t>(is, "channel count");
  if (channels == 0) throw Error(ErrorCode::FileFormat, "channel count is zero at byte offset 14");
  Scene s;
  s.extent.x = binio::get<std::uint16_t>(is, "extent x");
  s.extent.y = binio::get<std::uint16_t>(is, "extent y");
  s.extent.z = binio::get<std::uint16_t>(is, "extent z");
  const auto dtype = binio::get<std::uint8_t>(is, "dtype");
  if (dtype == static_cast<std::uint8_t>(Dtype::Int8)) {
    s.tensor = read_records<std::int8_t>(is, n, channels, s.extent);
  } else if (dtype == static_cast<std::uint8_t>(Dtype::Float32)) {
    s.tensor = read_records<float>(is, n, channels, s.extent);
  } else {
    throw Error(ErrorCode::FileFormat, "unknown dtype " + std::to_string(dtype) + " at byte offset 22");
  }
  return s;
}

void save_scene(const std::filesystem::path& path, const Scene& scene) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  write_scene(os, scene);
  if (!os) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_scene(is);
}

}  // namespace spocta

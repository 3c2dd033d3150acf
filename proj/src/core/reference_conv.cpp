#include "spocta/reference_conv.hpp"

#include <set>
#include <string>
#include <type_traits>
#include <unordered_map>

#include "spocta/error.hpp"
#include "spocta/postprocess.hpp"

namespace spocta {

namespace {

template <typename T>
void check_layer_shapes(const SparseTensor<T>& t, const WeightTensor<T>& w, const LayerSpec& spec) {
  validate_tensor(t);
  validate_weights(w);
  validate_layer(spec);
  if (t.channels != spec.c_in || w.c_in != spec.c_in || w.c_out != spec.c_out) {
    throw Error(ErrorCode::ChannelMismatch, "tensor, weights and layer disagree on channels");
  }
  if (w.kernel != spec.kernel()) {
    throw Error(ErrorCode::ChannelMismatch, "weight kernel size does not match operator");
  }
}

bool in_grid(int x, int y, int z, Coordinate e) {
  return x >= 0 && y >= 0 && z >= 0 && x < e.x && y < e.y && z < e.z;
}

}  // namespace

FloatTensor dense_oracle_conv(const FloatTensor& t, const WeightTensor<float>& w,
                              const LayerSpec& spec, Coordinate grid_extent,
                              std::span<const Coordinate> transposed_sites) {
  check_layer_shapes(t, w, spec);
  const Coordinate e = grid_extent;
  if (e.x == 0 || e.y == 0 || e.z == 0 || e.x > kOracleMaxExtent || e.y > kOracleMaxExtent ||
      e.z > kOracleMaxExtent) {
    throw Error(ErrorCode::GridTooLarge, "dense oracle supports extents in [1, 64] per axis");
  }
  if (spec.op == OpKind::Tconv2 && transposed_sites.empty() && !t.coords.empty()) {
    throw Error(ErrorCode::UnsupportedOp, "tconv2 oracle needs the target output sites");
  }

  const std::size_t c_in = spec.c_in;
  const std::size_t c_out = spec.c_out;
  const std::size_t cells = std::size_t{e.x} * e.y * e.z;
  std::vector<float> grid(cells * c_in, 0.0f);
  std::vector<std::uint8_t> occupied(cells, 0);
  auto cell = [&](int x, int y, int z) {
    return (static_cast<std::size_t>(z) * e.y + static_cast<std::size_t>(y)) * e.x +
           static_cast<std::size_t>(x);
  };
  for (std::size_t v = 0; v < t.size(); ++v) {
    const Coordinate c = t.coords[v];
    if (!in_grid(c.x, c.y, c.z, e)) {
      throw Error(ErrorCode::GridTooLarge, "input coordinate outside the oracle grid");
    }
    const std::size_t id = cell(c.x, c.y, c.z);
    occupied[id] = 1;
    for (std::size_t i = 0; i < c_in; ++i) grid[id * c_in + i] = t.row(v)[i];
  }

  const int kernel = spec.kernel();
  const int stride = spec.stride();
  const auto offsets = kernel_offsets(kernel);

  FloatTensor out;
  out.channels = c_out;
  std::vector<float> acc(c_out);

  // Accumulates W_k * f at input cell (x, y, z) when occupied.
  auto tap = [&](int x, int y, int z, std::size_t k) {
    if (!in_grid(x, y, z, e)) return false;
    const std::size_t id = cell(x, y, z);
    if (!occupied[id]) return false;
    for (std::size_t o = 0; o < c_out; ++o) {
      float s = 0.0f;
      for (std::size_t i = 0; i < c_in; ++i) s += w.at(o, i, k) * grid[id * c_in + i];
      acc[o] += s;
    }
    return true;
  };
  auto emit = [&](Coordinate site) {
    out.coords.push_back(site);
    const auto row = postprocess(acc, spec);
    out.features.insert(out.features.end(), row.begin(), row.end());
  };

  switch (spec.op) {
    case OpKind::Subm3:
      for (const Coordinate c : t.coords) {
        std::fill(acc.begin(), acc.end(), 0.0f);
        for (std::size_t k = 0; k < offsets.size(); ++k) {
          tap(c.x + offsets[k].dx, c.y + offsets[k].dy, c.z + offsets[k].dz, k);
        }
        emit(c);
      }
      break;
    case OpKind::Gconv3:
    case OpKind::Gconv2: {
      const int ox_max = e.x / 2 + 1, oy_max = e.y / 2 + 1, oz_max = e.z / 2 + 1;
      for (int x = 0; x < ox_max; ++x) {
        for (int y = 0; y < oy_max; ++y) {
          for (int z = 0; z < oz_max; ++z) {
            std::fill(acc.begin(), acc.end(), 0.0f);
            bool active = false;
            for (std::size_t k = 0; k < offsets.size(); ++k) {
              active |= tap(stride * x + offsets[k].dx, stride * y + offsets[k].dy,
                            stride * z + offsets[k].dz, k);
            }
            if (active) {
              emit(Coordinate{static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                              static_cast<std::uint16_t>(z)});
            }
          }
        }
      }
      break;
    }
    case OpKind::Tconv2:
      for (const Coordinate f : transposed_sites) {
        std::fill(acc.begin(), acc.end(), 0.0f);
        const Offset d{static_cast<std::int8_t>(f.x & 1), static_cast<std::int8_t>(f.y & 1),
                       static_cast<std::int8_t>(f.z & 1)};
        tap(f.x >> 1, f.y >> 1, f.z >> 1, offset_id(d, 2));
        emit(f);
      }
      break;
  }
  return out;
}

template <typename T>
SparseTensor<T> direct_conv_reference(const SparseTensor<T>& t, const WeightTensor<T>& w,
                                      const LayerSpec& spec,
                                      std::span<const Coordinate> transposed_sites) {
  using Acc = std::conditional_t<std::is_same_v<T, float>, float, std::int32_t>;
  check_layer_shapes(t, w, spec);
  if (spec.op == OpKind::Tconv2 && transposed_sites.empty() && !t.coords.empty()) {
    throw Error(ErrorCode::UnsupportedOp, "tconv2 reference needs the target output sites");
  }

  std::unordered_map<Coordinate, std::size_t, CoordinateHash> index;
  for (std::size_t v = 0; v < t.size(); ++v) index.emplace(t.coords[v], v);

  const int kernel = spec.kernel();
  const int stride = spec.stride();
  const auto offsets = kernel_offsets(kernel);
  const std::size_t c_in = spec.c_in;
  const std::size_t c_out = spec.c_out;

  SparseTensor<T> out;
  out.channels = c_out;
  std::vector<Acc> acc(c_out);

  auto tap = [&](long x, long y, long z, std::size_t k) {
    if (x < 0 || y < 0 || z < 0 || x > 0xffff || y > 0xffff || z > 0xffff) return;
    const auto it = index.find(Coordinate{static_cast<std::uint16_t>(x),
                                          static_cast<std::uint16_t>(y),
                                          static_cast<std::uint16_t>(z)});
    if (it == index.end()) return;
    const auto f = t.row(it->second);
    for (std::size_t o = 0; o < c_out; ++o) {
      Acc s = 0;
      for (std::size_t i = 0; i < c_in; ++i) s += static_cast<Acc>(w.at(o, i, k)) * static_cast<Acc>(f[i]);
      acc[o] += s;
    }
  };
  auto emit = [&](Coordinate site) {
    out.coords.push_back(site);
    const auto row = postprocess(std::span<const Acc>(acc), spec);
    out.features.insert(out.features.end(), row.begin(), row.end());
  };

  switch (spec.op) {
    case OpKind::Subm3:
      for (const Coordinate c : t.coords) {
        std::fill(acc.begin(), acc.end(), Acc{0});
        for (std::size_t k = 0; k < offsets.size(); ++k) {
          tap(long{c.x} + offsets[k].dx, long{c.y} + offsets[k].dy, long{c.z} + offsets[k].dz, k);
        }
        emit(c);
      }
      break;
    case OpKind::Gconv3:
    case OpKind::Gconv2: {
      std::set<Coordinate> sites;
      for (const Coordinate c : t.coords) {
        for (const Offset d : offsets) {
          const long x = long{c.x} - d.dx, y = long{c.y} - d.dy, z = long{c.z} - d.dz;
          if (x < 0 || y < 0 || z < 0 || x % 2 || y % 2 || z % 2) continue;
          sites.insert(Coordinate{static_cast<std::uint16_t>(x / 2), static_cast<std::uint16_t>(y / 2),
                                  static_cast<std::uint16_t>(z / 2)});
        }
      }
      for (const Coordinate s : sites) {
        std::fill(acc.begin(), acc.end(), Acc{0});
        for (std::size_t k = 0; k < offsets.size(); ++k) {
          tap(stride * long{s.x} + offsets[k].dx, stride * long{s.y} + offsets[k].dy,
              stride * long{s.z} + offsets[k].dz, k);
        }
        emit(s);
      }
      break;
    }
    case OpKind::Tconv2:
      for (const Coordinate f : transposed_sites) {
        std::fill(acc.begin(), acc.end(), Acc{0});
        const Offset d{static_cast<std::int8_t>(f.x & 1), static_cast<std::int8_t>(f.y & 1),
                       static_cast<std::int8_t>(f.z & 1)};
        tap(f.x >> 1, f.y >> 1, f.z >> 1, offset_id(d, 2));
        emit(f);
      }
      break;
  }
  return out;
}

template FloatTensor direct_conv_reference(const FloatTensor&, const WeightTensor<float>&,
                                           const LayerSpec&, std::span<const Coordinate>);
template QuantTensor direct_conv_reference(const QuantTensor&, const WeightTensor<std::int8_t>&,
                                           const LayerSpec&, std::span<const Coordinate>);

}  // namespace spocta

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spocta/types.hpp"

namespace spocta {

/// COO sparse tensor. Features are row-major with channels contiguous per
/// voxel. Element type is float in reference mode and int8 in quantized mode.
template <typename T>
struct SparseTensor {
  std::vector<Coordinate> coords;
  std::vector<T> features;
  std::size_t channels = 0;

  std::size_t size() const noexcept { return coords.size(); }

  std::span<const T> row(std::size_t i) const {
    return std::span<const T>(features).subspan(i * channels, channels);
  }
  std::span<T> row(std::size_t i) {
    return std::span<T>(features).subspan(i * channels, channels);
  }

  friend bool operator==(const SparseTensor&, const SparseTensor&) = default;
};

using FloatTensor = SparseTensor<float>;
using QuantTensor = SparseTensor<std::int8_t>;

/// Throws DuplicateCoordinateError (first duplicate pair in index order) or
/// Error(ShapeMismatch).
template <typename T>
void validate_tensor(const SparseTensor<T>& t);

/// Throws DuplicateCoordinateError if any coordinate repeats.
void check_unique(std::span<const Coordinate> coords);

/// Weights laid out as [c_out][c_in][K^3], offsets ordered by offset_id.
template <typename T>
struct WeightTensor {
  int kernel = 3;
  std::size_t c_out = 0;
  std::size_t c_in = 0;
  std::vector<T> values;
  float scale = 1.0f;
  std::int32_t zero_point = 0;

  std::size_t volume() const noexcept { return kernel_volume(kernel); }

  T at(std::size_t o, std::size_t i, std::size_t k) const {
    return values[(o * c_in + i) * volume() + k];
  }
  T& at(std::size_t o, std::size_t i, std::size_t k) {
    return values[(o * c_in + i) * volume() + k];
  }

  std::vector<Offset> offsets() const { return kernel_offsets(kernel); }

  static WeightTensor zeros(int kernel, std::size_t c_out, std::size_t c_in) {
    WeightTensor w;
    w.kernel = kernel;
    w.c_out = c_out;
    w.c_in = c_in;
    w.values.assign(c_out * c_in * kernel_volume(kernel), T{});
    return w;
  }

  friend bool operator==(const WeightTensor&, const WeightTensor&) = default;
};

/// Throws Error(ShapeMismatch) on a size/kernel mismatch or a non-zero zero_point.
template <typename T>
void validate_weights(const WeightTensor<T>& w);

}  // namespace spocta

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spocta/tensor.hpp"

namespace spocta {

inline constexpr std::size_t kLaneGroup = 16;

/// Per-voxel activation mask: bit c is set iff channel c is non-zero.
/// Popcounts are cached per 16-channel group.
class SparsityMask {
 public:
  SparsityMask() = default;
  explicit SparsityMask(std::size_t channels);

  template <typename T>
  static SparsityMask from_row(std::span<const T> row);

  std::size_t channels() const noexcept { return channels_; }
  bool test(std::size_t c) const noexcept { return (words_[c / 64] >> (c % 64)) & 1u; }
  std::size_t popcount() const noexcept { return popcount_; }
  std::span<const std::uint8_t> group_popcounts() const noexcept { return groups_; }
  /// 16-channel groups holding at least one non-zero.
  std::size_t nonzero_groups() const noexcept;
  /// Channel indices of set bits, ascending.
  std::vector<std::uint32_t> set_channels() const;

 private:
  std::size_t channels_ = 0;
  std::size_t popcount_ = 0;
  std::vector<std::uint64_t> words_;
  std::vector<std::uint8_t> groups_;
};

template <typename T>
std::vector<SparsityMask> build_masks(const SparseTensor<T>& t);

struct MaskDensity {
  std::uint64_t nonzero = 0;
  std::uint64_t total = 0;
  double density() const noexcept {
    return total == 0 ? 0.0 : static_cast<double>(nonzero) / static_cast<double>(total);
  }
};

MaskDensity mask_density(std::span<const SparsityMask> masks);

/// Activations and weight columns kept for the non-zero channels only.
/// `weight_columns` holds one column of `column_length` values per kept
/// channel, contiguous, in channel order.
template <typename T>
struct Compacted {
  std::vector<T> activations;
  std::vector<std::uint32_t> channels;
  std::vector<T> weight_columns;
  std::size_t column_length = 0;
};

/// `w_slice` is channel-major: column c occupies [c * column_length, (c+1) * column_length).
template <typename T>
Compacted<T> gather_compact(std::span<const T> row, const SparsityMask& mask,
                            std::span<const T> w_slice, std::size_t column_length);

}  // namespace spocta

#include "spocta/masks.hpp"

#include <bit>

namespace spocta {

SparsityMask::SparsityMask(std::size_t channels)
    : channels_(channels),
      words_((channels + 63) / 64, 0),
      groups_((channels + kLaneGroup - 1) / kLaneGroup, 0) {}

template <typename T>
SparsityMask SparsityMask::from_row(std::span<const T> row) {
  SparsityMask m(row.size());
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (row[c] != T{0}) {
      m.words_[c / 64] |= std::uint64_t{1} << (c % 64);
      ++m.groups_[c / kLaneGroup];
      ++m.popcount_;
    }
  }
  return m;
}

template SparsityMask SparsityMask::from_row(std::span<const float>);
template SparsityMask SparsityMask::from_row(std::span<const std::int8_t>);

std::size_t SparsityMask::nonzero_groups() const noexcept {
  std::size_t n = 0;
  for (const std::uint8_t g : groups_) n += g != 0;
  return n;
}

std::vector<std::uint32_t> SparsityMask::set_channels() const {
  std::vector<std::uint32_t> out;
  out.reserve(popcount_);
  for (std::size_t w = 0; w < words_.size(); ++w) {
    std::uint64_t bits = words_[w];
    while (bits != 0) {
      out.push_back(static_cast<std::uint32_t>(w * 64 + std::countr_zero(bits)));
      bits &= bits - 1;
    }
  }
  return out;
}

template <typename T>
std::vector<SparsityMask> build_masks(const SparseTensor<T>& t) {
  std::vector<SparsityMask> masks;
  masks.reserve(t.size());
  for (std::size_t v = 0; v < t.size(); ++v) masks.push_back(SparsityMask::from_row(t.row(v)));
  return masks;
}

template std::vector<SparsityMask> build_masks(const SparseTensor<float>&);
template std::vector<SparsityMask> build_masks(const SparseTensor<std::int8_t>&);

MaskDensity mask_density(std::span<const SparsityMask> masks) {
  MaskDensity d;
  for (const SparsityMask& m : masks) {
    d.nonzero += m.popcount();
    d.total += m.channels();
  }
  return d;
}

template <typename T>
Compacted<T> gather_compact(std::span<const T> row, const SparsityMask& mask,
                            std::span<const T> w_slice, std::size_t column_length) {
  Compacted<T> c;
  c.column_length = column_length;
  c.channels = mask.set_channels();
  c.activations.reserve(c.channels.size());
  c.weight_columns.reserve(c.channels.size() * column_length);
  for (const std::uint32_t ch : c.channels) {
    c.activations.push_back(row[ch]);
    const auto col = w_slice.subspan(std::size_t{ch} * column_length, column_length);
    c.weight_columns.insert(c.weight_columns.end(), col.begin(), col.end());
  }
  return c;
}

template Compacted<float> gather_compact(std::span<const float>, const SparsityMask&,
                                         std::span<const float>, std::size_t);
template Compacted<std::int8_t> gather_compact(std::span<const std::int8_t>, const SparsityMask&,
                                               std::span<const std::int8_t>, std::size_t);

}  // namespace spocta

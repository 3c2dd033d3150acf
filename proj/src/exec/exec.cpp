#include "spocta/exec.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <thread>
#include <type_traits>

#include "spocta/error.hpp"
#include "spocta/masks.hpp"
#include "spocta/postprocess.hpp"

namespace spocta {

Dataflow default_dataflow(OpKind op) noexcept {
  return (op == OpKind::Subm3 || op == OpKind::Gconv2) ? Dataflow::OutputStationary
                                                       : Dataflow::InputStationary;
}

namespace {

template <typename T>
void check_inputs(const SparseTensor<T>& input, const WeightTensor<T>& w, const InOutMap& map,
                  const LayerSpec& spec) {
  validate_layer(spec);
  validate_tensor(input);
  validate_weights(w);
  if (input.channels != spec.c_in || w.c_in != spec.c_in || w.c_out != spec.c_out ||
      w.kernel != spec.kernel()) {
    throw Error(ErrorCode::ChannelMismatch, "input, weights and layer disagree on shape");
  }
  if (map.op != spec.op) {
    throw Error(ErrorCode::MapInconsistent, "map was built for a different operator");
  }
  validate_map(map, input.size());
  if constexpr (std::is_same_v<T, std::int8_t>) {
    const std::uint64_t bound = std::uint64_t{w.volume()} * spec.c_in * 128u * 128u;
    if (bound >= (std::uint64_t{1} << 31)) {
      throw Error(ErrorCode::ConfigInvalid, "int32 accumulators could overflow for this C_in");
    }
  }
}

}  // namespace

template <typename T>
SparseTensor<T> execute_layer(const SparseTensor<T>& input, const WeightTensor<T>& w,
                              const InOutMap& map, const LayerSpec& spec,
                              const ExecOptions& options, ExecStats* stats) {
  using Acc = std::conditional_t<std::is_same_v<T, float>, float, std::int32_t>;
  check_inputs(input, w, map, spec);

  const std::size_t c_in = spec.c_in;
  const std::size_t c_out = spec.c_out;
  const std::size_t volume = w.volume();
  const std::size_t tiles = cout_tiles(c_out);
  const std::size_t out_count = map.out_coords.size();
  const auto& entries = map.entries;
  const Dataflow dataflow =
      options.dataflow == Dataflow::Auto ? default_dataflow(spec.op) : options.dataflow;

  // Channel-major weight columns per tap: wt[(k * c_in + i) * c_out + o].
  std::vector<T> wt(volume * c_in * c_out);
  for (std::size_t o = 0; o < c_out; ++o) {
    for (std::size_t i = 0; i < c_in; ++i) {
      for (std::size_t k = 0; k < volume; ++k) wt[(k * c_in + i) * c_out + o] = w.at(o, i, k);
    }
  }

  const auto masks = build_masks(input);
  std::vector<std::vector<std::uint32_t>> gathered(input.size());
  std::vector<std::uint32_t> all_channels(c_in);
  std::iota(all_channels.begin(), all_channels.end(), 0u);
  if (options.sparse_gather) {
    for (std::size_t v = 0; v < input.size(); ++v) gathered[v] = masks[v].set_channels();
  }
  auto channels_of = [&](std::uint32_t v) -> const std::vector<std::uint32_t>& {
    return options.sparse_gather ? gathered[v] : all_channels;
  };

  std::vector<Acc> psum(out_count * c_out, Acc{0});
  std::vector<std::uint32_t> remaining(out_count, 0);
  for (const MapEntry& e : entries) ++remaining[e.out];
  const std::vector<std::uint32_t> window_size = remaining;
  std::vector<std::uint8_t> emitted(out_count, 0);
  std::vector<std::uint32_t> visits(entries.size(), 0);

  SparseTensor<T> out;
  out.channels = c_out;
  out.coords = map.out_coords;
  out.features.assign(out_count * c_out, T{});

  auto accumulate = [&](std::size_t idx, std::size_t tile) -> std::uint64_t {
    const MapEntry& e = entries[idx];
    const auto row = input.row(e.in);
    const auto& chans = channels_of(e.in);
    const std::size_t o0 = tile * kLaneGroup;
    const std::size_t o1 = std::min(c_out, o0 + kLaneGroup);
    Acc* acc = psum.data() + std::size_t{e.out} * c_out;
    for (const std::uint32_t ch : chans) {
      const Acc a = static_cast<Acc>(row[ch]);
      const T* col = wt.data() + (e.kernel_offset_id * c_in + ch) * c_out;
      for (std::size_t o = o0; o < o1; ++o) acc[o] += a * static_cast<Acc>(col[o]);
    }
    if (tile == 0) ++visits[idx];
    return static_cast<std::uint64_t>(chans.size()) * (o1 - o0);
  };
  auto emit = [&](std::uint32_t row) {
    const auto values = postprocess(std::span<const Acc>(psum.data() + std::size_t{row} * c_out, c_out), spec);
    std::copy(values.begin(), values.end(), out.features.begin() + std::size_t{row} * c_out);
    ++emitted[row];
  };

  std::uint64_t macs = 0;
  if (dataflow == Dataflow::OutputStationary) {
    // Windows in order of first appearance; each worker owns whole windows.
    std::vector<std::vector<std::uint32_t>> window_entries(out_count);
    std::vector<std::uint32_t> windows;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      auto& list = window_entries[entries[i].out];
      if (list.empty()) windows.push_back(entries[i].out);
      list.push_back(static_cast<std::uint32_t>(i));
    }
    auto run_windows = [&](std::size_t begin, std::size_t end, std::uint64_t& local_macs) {
      for (std::size_t wi = begin; wi < end; ++wi) {
        const std::uint32_t row = windows[wi];
        for (std::size_t tile = 0; tile < tiles; ++tile) {
          for (const std::uint32_t idx : window_entries[row]) local_macs += accumulate(idx, tile);
        }
        for (std::size_t n = window_entries[row].size(); n > 0; --n) {
          if (--remaining[row] == 0) emit(row);
        }
      }
    };
    const std::size_t workers =
        std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(1, windows.size()));
    std::vector<std::uint64_t> worker_macs(workers, 0);
    if (workers == 1) {
      run_windows(0, windows.size(), worker_macs[0]);
    } else {
      std::vector<std::jthread> pool;
      const std::size_t chunk = (windows.size() + workers - 1) / workers;
      for (std::size_t t = 0; t < workers; ++t) {
        const std::size_t begin = std::min(windows.size(), t * chunk);
        const std::size_t end = std::min(windows.size(), begin + chunk);
        pool.emplace_back([&, begin, end, t] { run_windows(begin, end, worker_macs[t]); });
      }
    }
    macs = std::accumulate(worker_macs.begin(), worker_macs.end(), std::uint64_t{0});
  } else {
    // Each input row is gathered once and its products scattered to the
    // partial-sum rows of every output it feeds.
    std::vector<std::vector<std::uint32_t>> input_entries(input.size());
    std::vector<std::uint32_t> inputs;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      auto& list = input_entries[entries[i].in];
      if (list.empty()) inputs.push_back(entries[i].in);
      list.push_back(static_cast<std::uint32_t>(i));
    }
    for (const std::uint32_t v : inputs) {
      for (const std::uint32_t idx : input_entries[v]) {
        for (std::size_t tile = 0; tile < tiles; ++tile) macs += accumulate(idx, tile);
        const std::uint32_t row = entries[idx].out;
        if (--remaining[row] == 0) emit(row);
      }
    }
  }

  for (std::size_t row = 0; row < out_count; ++row) {
    if (window_size[row] == 0) {
      emit(static_cast<std::uint32_t>(row));
    }
  }
  for (std::size_t row = 0; row < out_count; ++row) {
    if (emitted[row] != 1) {
      throw Error(ErrorCode::MapInconsistent, "output row emitted " +
                                                  std::to_string(emitted[row]) + " times");
    }
  }

  if (options.on_weight_access) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      for (std::size_t tile = 0; tile < tiles; ++tile) {
        options.on_weight_access(WeightAccess{static_cast<std::uint32_t>(i),
                                              entries[i].kernel_offset_id,
                                              static_cast<std::uint32_t>(tile)});
      }
    }
  }

  if (stats != nullptr) {
    stats->dataflow = dataflow;
    stats->entry_nnz.resize(entries.size());
    stats->entry_nnz_groups.resize(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const SparsityMask& m = masks[entries[i].in];
      stats->entry_nnz[i] = static_cast<std::uint16_t>(m.popcount());
      stats->entry_nnz_groups[i] = static_cast<std::uint16_t>(m.nonzero_groups());
    }
    stats->entry_visits = std::move(visits);
    stats->macs = macs;
    stats->rows_emitted = static_cast<std::uint64_t>(
        std::count(emitted.begin(), emitted.end(), std::uint8_t{1}));
  }
  return out;
}

template FloatTensor execute_layer(const FloatTensor&, const WeightTensor<float>&,
                                   const InOutMap&, const LayerSpec&, const ExecOptions&,
                                   ExecStats*);
template QuantTensor execute_layer(const QuantTensor&, const WeightTensor<std::int8_t>&,
                                   const InOutMap&, const LayerSpec&, const ExecOptions&,
                                   ExecStats*);

}  // namespace spocta

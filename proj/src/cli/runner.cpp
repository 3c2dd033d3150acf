#include "spocta/cli/runner.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "spocta/error.hpp"
#include "spocta/masks.hpp"
#include "spocta/reference_conv.hpp"

namespace spocta {

template <typename T>
std::optional<std::string> compare_tensors(const SparseTensor<T>& got, const SparseTensor<T>& want) {
  if (got.size() != want.size()) {
    return "row count " + std::to_string(got.size()) + " vs " + std::to_string(want.size());
  }
  if (got.channels != want.channels) {
    return "channel count " + std::to_string(got.channels) + " vs " + std::to_string(want.channels);
  }
  std::unordered_map<Coordinate, std::size_t, CoordinateHash> rows;
  rows.reserve(want.size());
  for (std::size_t i = 0; i < want.size(); ++i) rows.emplace(want.coords[i], i);
  for (std::size_t i = 0; i < got.size(); ++i) {
    const Coordinate c = got.coords[i];
    const auto it = rows.find(c);
    auto where = [&] {
      return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + "," + std::to_string(c.z) + ")";
    };
    if (it == rows.end()) return "unexpected output site " + where();
    const auto a = got.row(i);
    const auto b = want.row(it->second);
    for (std::size_t ch = 0; ch < a.size(); ++ch) {
      bool same;
      if constexpr (std::is_same_v<T, float>) {
        same = std::fabs(a[ch] - b[ch]) <= 1e-4f * std::max(1.0f, std::fabs(b[ch]));
      } else {
        same = a[ch] == b[ch];
      }
      if (!same) {
        return "site " + where() + " channel " + std::to_string(ch) + ": " +
               std::to_string(static_cast<double>(a[ch])) + " vs " +
               std::to_string(static_cast<double>(b[ch]));
      }
    }
  }
  return std::nullopt;
}

template std::optional<std::string> compare_tensors(const FloatTensor&, const FloatTensor&);
template std::optional<std::string> compare_tensors(const QuantTensor&, const QuantTensor&);

namespace {

std::optional<Coordinate> small_grid(std::span<const Coordinate> coords) {
  Coordinate e{1, 1, 1};
  for (const Coordinate c : coords) {
    if (c.x >= kOracleMaxExtent || c.y >= kOracleMaxExtent || c.z >= kOracleMaxExtent) {
      return std::nullopt;
    }
    e.x = std::max<std::uint16_t>(e.x, c.x + 1);
    e.y = std::max<std::uint16_t>(e.y, c.y + 1);
    e.z = std::max<std::uint16_t>(e.z, c.z + 1);
  }
  return e;
}

}  // namespace

template <typename T>
ForwardResult<T> run_forward(const SparseTensor<T>& input, const Network<T>& net,
                             const RunOptions& options) {
  validate_network(net);
  validate_tensor(input);
  if (!net.layers.empty() && input.channels != net.layers.front().spec.c_in) {
    throw Error(ErrorCode::ChannelMismatch, "scene has " + std::to_string(input.channels) +
                                                " channels, network expects " +
                                                std::to_string(net.layers.front().spec.c_in));
  }
  const std::size_t n_layers = net.layers.size();
  std::vector<InOutMap> down_maps(n_layers);
  std::vector<std::vector<Coordinate>> down_inputs(n_layers);
  std::vector<bool> exported(n_layers, false);
  for (const auto& l : net.layers) {
    if (l.spec.op == OpKind::Tconv2) exported[*l.spec.paired_layer] = true;
  }

  ForwardResult<T> result;
  SparseTensor<T> cur = input;
  for (std::size_t i = 0; i < n_layers; ++i) {
    const auto& layer = net.layers[i];
    const LayerSpec& spec = layer.spec;
    const std::string where = "layer " + std::to_string(i) + " (" + std::string(to_string(spec.op)) + "): ";
    LayerTrace lt;
    lt.layer_id = i;
    lt.op = spec.op;
    lt.c_in = spec.c_in;
    lt.c_out = spec.c_out;
    lt.bytes_per_value = sizeof(T);
    lt.voxels_in = cur.size();
    lt.exports_map = exported[i];

    InOutMap map;
    std::span<const Coordinate> tconv_targets;
    if (spec.op == OpKind::Tconv2) {
      const std::size_t p = *spec.paired_layer;
      if (cur.coords != down_maps[p].out_coords) {
        throw Error(ErrorCode::MapMismatch,
                    where + "input sites differ from the paired gconv2 output sites");
      }
      tconv_targets = down_inputs[p];
      map = transpose_map(down_maps[p], tconv_targets);
      lt.search = reload_trace(map, cur.size());
    } else {
      SearchResult r = spec.op == OpKind::Subm3    ? search_subm3(cur.coords)
                       : spec.op == OpKind::Gconv2 ? search_gconv2(cur.coords)
                                                   : search_gconv3(cur.coords);
      map = std::move(r.map);
      lt.search = std::move(r.trace);
      if (options.hash_baseline) lt.hash_search = search_hash(cur.coords, spec.op).trace;
      if (spec.op == OpKind::Gconv2) {
        down_maps[i] = map;
        down_inputs[i] = cur.coords;
      }
    }

    if (options.oracle) {
      const InOutMap brute = search_bruteforce(cur.coords, spec.op, tconv_targets);
      if (canonical_triples(map, cur.coords) != canonical_triples(brute, cur.coords)) {
        throw Error(ErrorCode::OracleMismatch, where + "map differs from brute-force enumeration");
      }
    }

    ExecOptions eo;
    eo.threads = options.threads;
    ExecStats stats;
    SparseTensor<T> out = execute_layer(cur, layer.weights, map, spec, eo, &stats);

    if (options.oracle) {
      SparseTensor<T> want;
      const auto grid = small_grid(cur.coords);
      if constexpr (std::is_same_v<T, float>) {
        want = grid ? dense_oracle_conv(cur, layer.weights, spec, *grid, tconv_targets)
                    : direct_conv_reference(cur, layer.weights, spec, tconv_targets);
      } else {
        want = direct_conv_reference(cur, layer.weights, spec, tconv_targets);
      }
      if (const auto diff = compare_tensors(out, want)) {
        throw Error(ErrorCode::OracleMismatch, where + "output differs from the oracle at " + *diff);
      }
    }

    lt.entry_taps.reserve(map.entries.size());
    for (const MapEntry& e : map.entries) lt.entry_taps.push_back(e.kernel_offset_id);
    lt.entry_nnz = std::move(stats.entry_nnz);
    lt.entry_nnz_groups = std::move(stats.entry_nnz_groups);
    for (const auto& v : lt.search.voxels) lt.candidates += v.candidates;
    lt.input_density = mask_density(build_masks(cur)).density();
    lt.voxels_out = out.size();
    result.layers.push_back(std::move(lt));
    cur = std::move(out);
  }
  result.output = std::move(cur);
  return result;
}

template ForwardResult<float> run_forward(const FloatTensor&, const FloatNetwork&, const RunOptions&);
template ForwardResult<std::int8_t> run_forward(const QuantTensor&, const QuantNetwork&,
                                                const RunOptions&);

SimReport model_run(const std::vector<LayerTrace>& layers, const RunOptions& options) {
  const PipelineConfig& cfg = options.pipeline;
  cfg.validate();
  SimReport rep;
  rep.mode = cfg.mode;
  rep.sparse_compute = options.sparse_compute;

  for (const LayerTrace& lt : layers) {
    LayerSimReport l;
    l.layer_id = lt.layer_id;
    l.op = lt.op;
    l.voxels_in = lt.voxels_in;
    l.voxels_out = lt.voxels_out;
    l.entries = lt.entry_taps.size();
    l.input_density = lt.input_density;
    l.search_parallel = simulate_search(lt.search, SearchMode::Parallel, cfg);
    l.search_serial = simulate_search(lt.search, SearchMode::Serial, cfg);
    if (lt.hash_search) l.search_hash = simulate_search(*lt.hash_search, SearchMode::Hash, cfg);

    const auto sparse = simulate_compute(lt.entry_nnz, lt.entry_nnz_groups, lt.c_in, lt.c_out, true,
                                         options.granularity, cfg);
    const auto dense = simulate_compute(lt.entry_nnz, lt.entry_nnz_groups, lt.c_in, lt.c_out, false,
                                        options.granularity, cfg);
    l.compute_sparse = sparse.total;
    l.compute_dense = dense.total;
    std::vector<std::uint32_t> entry_cycles = options.sparse_compute ? sparse.per_entry : dense.per_entry;

    const LayerGeometry geom{kernel_size(lt.op), lt.c_in, lt.c_out, lt.bytes_per_value};
    CacheConfig cache_cfg = options.cache;
    if (options.cache_total_bytes && geom.kernel == 3) {
      cache_cfg = options.cache.allocation == Allocation::Uniform
                      ? CacheConfig::uniform(*options.cache_total_bytes)
                      : CacheConfig::non_uniform_for_total(*options.cache_total_bytes, geom.tap_bytes(),
                                                           8 * geom.tap_bytes());
    }
    WeightCache cache(cache_cfg, geom, &l.ledger);
    const std::size_t tiles = geom.tiles();
    for (std::size_t e = 0; e < lt.entry_taps.size(); ++e) {
      for (std::size_t t = 0; t < tiles; ++t) {
        const AccessOutcome a = cache.access(lt.entry_taps[e], static_cast<std::uint32_t>(t));
        if (!a.hit) {
          const std::uint64_t stall = cfg.dram_cycles(a.bytes_fetched);
          entry_cycles[e] += static_cast<std::uint32_t>(stall);
          l.weight_stall_cycles += stall;
        }
      }
    }
    PartitionStats partitioned;
    for (std::size_t p = 0; p < kPartitionCount; ++p) {
      l.weight_cache[p] = cache.stats(static_cast<Partition>(p));
      partitioned.merge(l.weight_cache[p]);
    }
    const PartitionStats all = cache.total();
    l.weight_stream = PartitionStats{all.accesses - partitioned.accesses, all.hits - partitioned.hits,
                                     all.misses - partitioned.misses,
                                     all.bytes_fetched - partitioned.bytes_fetched};

    // Feature, partial-sum and map traffic around the weight fetches.
    const std::uint64_t bpv = lt.bytes_per_value;
    const std::uint64_t entries = lt.entry_taps.size();
    TrafficLedger& led = l.ledger;
    led.dram_read_bytes += lt.voxels_in * lt.c_in * bpv;
    led.sram_write(Memory::Ifmap, lt.voxels_in * lt.c_in * bpv);
    std::uint64_t gathered = 0;
    for (std::size_t e = 0; e < entries; ++e) {
      gathered += options.sparse_compute ? lt.entry_nnz[e] : lt.c_in;
    }
    led.sram_read(Memory::Ifmap, gathered * bpv * tiles);
    led.sram_read(Memory::Psum, entries * lt.c_out * 4);
    led.sram_write(Memory::Psum, entries * lt.c_out * 4);
    led.dram_write_bytes += lt.voxels_out * lt.c_out * bpv;
    if (lt.op == OpKind::Subm3 || lt.op == OpKind::Gconv2) {
      led.sram_write(Memory::OctreeTable, lt.voxels_in * 4);
      led.sram_read(Memory::OctreeTable, lt.candidates * 4);
    }
    led.sram_write(Memory::MapTable, entries * 9);
    led.sram_read(Memory::MapTable, entries * 9);
    if (lt.op == OpKind::Tconv2) led.dram_read_bytes += entries * 9;
    if (lt.exports_map) led.dram_write_bytes += entries * 9;

    const auto steps = search_schedule(lt.search, cfg);
    l.timing = simulate_pipeline(steps, entry_cycles, cfg);
    rep.layers.push_back(std::move(l));
  }
  rep.finalize();
  return rep;
}

}  // namespace spocta

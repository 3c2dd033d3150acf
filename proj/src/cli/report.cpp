#include "spocta/cli/report.hpp"

#include <string>

namespace spocta {

namespace {

std::string_view mode_name(PipelineMode m) {
  return m == PipelineMode::FineGrained ? "fine" : "coarse";
}

Json to_json(const PartitionStats& s) {
  return Json{{"accesses", s.accesses}, {"hits", s.hits}, {"misses", s.misses},
              {"bytes_fetched", s.bytes_fetched}};
}

Json per_memory(const std::array<std::uint64_t, kMemoryCount>& v) {
  Json j = Json::object();
  for (std::size_t m = 0; m < kMemoryCount; ++m) j[std::string(to_string(static_cast<Memory>(m)))] = v[m];
  return j;
}

}  // namespace

Json to_json(const SearchCycles& c) {
  return Json{{"build", c.build}, {"query", c.query}, {"penalty", c.penalty}, {"total", c.total}};
}

Json to_json(const PipelineTiming& t) {
  return Json{{"search_only", t.search_only},
              {"compute_only", t.compute_only},
              {"fine_total", t.fine_total},
              {"coarse_total", t.coarse_total},
              {"total", t.total},
              {"overlap", t.overlap},
              {"stall_map_full", t.stall_map_full},
              {"stall_map_empty", t.stall_map_empty}};
}

Json to_json(const TrafficLedger& l) {
  return Json{{"dram_read_bytes", l.dram_read_bytes},
              {"dram_write_bytes", l.dram_write_bytes},
              {"sram_read_bytes", per_memory(l.sram_read_bytes)},
              {"sram_write_bytes", per_memory(l.sram_write_bytes)}};
}

Json to_json(const EnergyBreakdown& e) {
  Json sram = Json::object();
  for (std::size_t m = 0; m < kMemoryCount; ++m) {
    sram[std::string(to_string(static_cast<Memory>(m)))] = e.sram_pj[m];
  }
  return Json{{"dram_read_pj", e.dram_read_pj}, {"dram_write_pj", e.dram_write_pj},
              {"dram_pj", e.dram_pj},           {"sram_pj", sram},
              {"sram_pj_total", e.sram_pj_total}, {"total_pj", e.total_pj}};
}

Json to_json(const SimReport& r) {
  Json layers = Json::array();
  for (const LayerSimReport& l : r.layers) {
    Json cache = Json::object();
    for (std::size_t p = 0; p < kPartitionCount; ++p) {
      cache[std::string(to_string(static_cast<Partition>(p)))] = to_json(l.weight_cache[p]);
    }
    cache["stream"] = to_json(l.weight_stream);
    Json search{{"parallel", to_json(l.search_parallel)}, {"serial", to_json(l.search_serial)}};
    search["hash"] = l.search_hash ? to_json(*l.search_hash) : Json(nullptr);
    layers.push_back(Json{{"layer", l.layer_id},
                          {"op", to_string(l.op)},
                          {"voxels_in", l.voxels_in},
                          {"voxels_out", l.voxels_out},
                          {"map_entries", l.entries},
                          {"input_density", l.input_density},
                          {"search_cycles", search},
                          {"compute_cycles", Json{{"sparse", l.compute_sparse}, {"dense", l.compute_dense}}},
                          {"weight_stall_cycles", l.weight_stall_cycles},
                          {"pipeline", to_json(l.timing)},
                          {"weight_cache", cache},
                          {"traffic", to_json(l.ledger)}});
  }
  return Json{{"pipeline_mode", mode_name(r.mode)},
              {"sparse_compute", r.sparse_compute},
              {"total_cycles", r.totals.total},
              {"totals", to_json(r.totals)},
              {"speedups", Json{{"search_parallel_vs_serial", r.search_speedup_parallel_vs_serial},
                                {"search_parallel_vs_hash", r.search_speedup_parallel_vs_hash},
                                {"compute_sparse_vs_dense", r.compute_speedup_sparse_vs_dense},
                                {"pipeline_fine_vs_coarse", r.pipeline_speedup_fine_vs_coarse}}},
              {"traffic", to_json(r.ledger)},
              {"layers", layers}};
}

Json error_json(ErrorCode code, const std::string& message) {
  return Json{{"error", Json{{"code", to_string(code)}, {"message", message}}}};
}

Json search_stats_json(const SearchTrace& trace, const InOutMap& map,
                       const std::optional<SearchTrace>& hash_trace, const PipelineConfig& cfg) {
  std::uint64_t candidates = 0, cross = 0;
  for (const auto& v : trace.voxels) {
    candidates += v.candidates;
    cross += v.cross_block;
  }
  const double n = static_cast<double>(trace.voxels.size());
  Json j{{"op", to_string(map.op)},
         {"voxels", trace.voxels.size()},
         {"out_voxels", map.out_coords.size()},
         {"map_entries", map.entries.size()},
         {"blocks", trace.block_sizes.size()},
         {"candidates", candidates},
         {"avg_candidates_per_voxel", n == 0 ? 0.0 : static_cast<double>(candidates) / n},
         {"cross_block_queries", cross},
         {"query_batches", trace.query_batches},
         {"bank_conflicts", trace.bank_conflicts}};
  const SearchCycles par = simulate_search(trace, SearchMode::Parallel, cfg);
  const SearchCycles ser = simulate_search(trace, SearchMode::Serial, cfg);
  Json cycles{{"parallel", to_json(par)}, {"serial", to_json(ser)}};
  cycles["hash"] = hash_trace ? to_json(simulate_search(*hash_trace, SearchMode::Hash, cfg)) : Json(nullptr);
  j["cycles"] = cycles;
  if (kernel_size(map.op) == 3) {
    const PartitionShares s = partition_shares(map);
    j["partition_shares"] = Json{{"center", s.center}, {"mid", s.mid}, {"up", s.up}, {"down", s.down}};
  }
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace spocta

#include "spocta/sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "spocta/error.hpp"

namespace spocta {

namespace {

constexpr std::uint64_t kMapRecordBytes = 9;  // u32 in, u32 out, u8 tap

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

double ratio(double num, double den) { return den == 0 ? 0.0 : num / den; }

}  // namespace

void PipelineConfig::validate() const {
  auto fail = [](const char* why) { return Error(ErrorCode::ConfigInvalid, why); };
  if (fifo_count == 0 || !std::has_single_bit(fifo_count)) {
    throw fail("fifo_count must be a power of two");
  }
  if (fifo_depth == 0) throw fail("fifo_depth must be positive");
  if (query_banks == 0 || !std::has_single_bit(query_banks)) {
    throw fail("query_banks must be a power of two");
  }
  if (pe_in_lanes == 0 || pe_out_lanes == 0) throw fail("PE lanes must be positive");
  if (filter_writes_per_cycle == 0) throw fail("filter_writes_per_cycle must be positive");
  if (!(clock_hz > 0) || !(dram_bytes_per_second > 0)) {
    throw fail("clock and DRAM bandwidth must be positive");
  }
}

std::uint64_t PipelineConfig::dram_cycles(std::uint64_t bytes) const noexcept {
  if (bytes == 0) return 0;
  return static_cast<std::uint64_t>(std::ceil(static_cast<double>(bytes) / dram_bytes_per_cycle()));
}

SearchCycles simulate_search(const SearchTrace& trace, SearchMode mode, const PipelineConfig& cfg) {
  SearchCycles s;
  if (mode == SearchMode::Hash) {
    if (trace.hash_probes.size() != trace.voxels.size()) {
      throw Error(ErrorCode::ConfigInvalid, "hash timing needs a hash-baseline trace");
    }
    if (trace.op == OpKind::Subm3) {
      s.build = trace.hash_insert_probes + trace.voxels.size() * std::uint64_t{cfg.hash_cycles_per_query};
    }
    for (std::size_t i = 0; i < trace.voxels.size(); ++i) {
      s.query += std::uint64_t{trace.voxels[i].candidates} * cfg.hash_cycles_per_query +
                 trace.hash_probes[i];
    }
  } else if (trace.op == OpKind::Tconv2) {
    std::uint64_t entries = 0;
    for (const auto& v : trace.voxels) entries += v.hits;
    s.query = cfg.dram_cycles(entries * kMapRecordBytes);
  } else if (trace.op == OpKind::Gconv3) {
    s.query = trace.voxels.size();
  } else {
    s.build = std::accumulate(trace.block_sizes.begin(), trace.block_sizes.end(), std::uint64_t{0});
    for (const auto& v : trace.voxels) {
      if (mode == SearchMode::Parallel) {
        s.query += v.query_cycles;
        s.penalty += std::uint64_t{v.cross_block_batches} * cfg.cross_block_penalty;
      } else {
        s.query += v.candidates;
        s.penalty += std::uint64_t{v.cross_block} * cfg.cross_block_penalty;
      }
    }
  }
  s.total = s.build + s.query + s.penalty;
  return s;
}

ComputeCycles simulate_compute(std::span<const std::uint16_t> entry_nnz,
                               std::span<const std::uint16_t> entry_nnz_groups,
                               std::size_t c_in, std::size_t c_out, bool sparse,
                               Granularity granularity, const PipelineConfig& cfg) {
  if (sparse && granularity == Granularity::Group && entry_nnz_groups.size() != entry_nnz.size()) {
    throw Error(ErrorCode::MapInconsistent, "group popcounts missing for some entries");
  }
  const std::uint64_t out_tiles = ceil_div(c_out, cfg.pe_out_lanes);
  const std::uint64_t dense = ceil_div(c_in, cfg.pe_in_lanes) * out_tiles;
  ComputeCycles c;
  c.per_entry.resize(entry_nnz.size());
  for (std::size_t i = 0; i < entry_nnz.size(); ++i) {
    std::uint64_t cycles = dense;
    if (sparse) {
      cycles = granularity == Granularity::Bit ? ceil_div(entry_nnz[i], cfg.pe_in_lanes) * out_tiles
                                               : std::uint64_t{entry_nnz_groups[i]} * out_tiles;
    }
    c.per_entry[i] = static_cast<std::uint32_t>(cycles);
    c.total += cycles;
  }
  return c;
}

std::vector<SearchStep> search_schedule(const SearchTrace& trace, const PipelineConfig& cfg) {
  std::vector<SearchStep> steps;
  steps.reserve(trace.voxels.size() + trace.block_sizes.size());
  const bool table_op = trace.op == OpKind::Subm3 || trace.op == OpKind::Gconv2;

  if (trace.op == OpKind::Tconv2) {
    // The reloaded map streams in; each record waits for its bytes.
    std::uint64_t bytes = 0, done = 0;
    for (const auto& v : trace.voxels) {
      bytes += std::uint64_t{v.hits} * kMapRecordBytes;
      const std::uint64_t until = cfg.dram_cycles(bytes);
      steps.push_back(SearchStep{static_cast<std::uint32_t>(until - done), v.hits, 0});
      done = until;
    }
    return steps;
  }
  if (!table_op) {
    for (const auto& v : trace.voxels) steps.push_back(SearchStep{1, v.hits, 0});
    return steps;
  }

  // Table build finish time per block when the build lane runs ahead.
  std::vector<std::uint64_t> built(trace.block_sizes.size());
  std::uint64_t t = 0;
  for (std::size_t b = 0; b < built.size(); ++b) built[b] = t += trace.block_sizes[b];

  std::uint32_t current = ~0u;
  for (const auto& v : trace.voxels) {
    SearchStep s;
    if (v.block != current) {
      current = v.block;
      if (!cfg.overlap_table_build && current < trace.block_sizes.size()) {
        steps.push_back(SearchStep{trace.block_sizes[current], 0, 0});
      }
    }
    if (cfg.overlap_table_build && v.block < built.size()) s.not_before = built[v.block];
    s.cycles = v.query_cycles + std::uint32_t{v.cross_block_batches} * cfg.cross_block_penalty;
    s.entries = v.hits;
    steps.push_back(s);
  }
  return steps;
}

void PipelineTiming::accumulate(const PipelineTiming& o) {
  search_only += o.search_only;
  compute_only += o.compute_only;
  fine_total += o.fine_total;
  coarse_total += o.coarse_total;
  total += o.total;
  overlap += o.overlap;
  stall_map_full += o.stall_map_full;
  stall_map_empty += o.stall_map_empty;
}

PipelineTiming simulate_pipeline(std::span<const SearchStep> steps,
                                 std::span<const std::uint32_t> entry_cycles,
                                 const PipelineConfig& cfg) {
  cfg.validate();
  std::uint64_t produced = 0;
  for (const SearchStep& s : steps) produced += s.entries;
  if (produced != entry_cycles.size()) {
    throw Error(ErrorCode::MapInconsistent,
                "search steps yield " + std::to_string(produced) + " entries but compute has " +
                    std::to_string(entry_cycles.size()));
  }
  const std::size_t capacity = cfg.fifo_capacity();
  const std::size_t writes = cfg.filter_writes_per_cycle;
  const std::size_t m = entry_cycles.size();

  PipelineTiming r;
  r.compute_only = std::accumulate(entry_cycles.begin(), entry_cycles.end(), std::uint64_t{0});

  // Producer alone: filter writes one cycle after the query step, at most
  // `writes` entries per cycle, with an unbounded map table.
  {
    std::vector<std::uint64_t> write(m);
    std::uint64_t t = 0, end = 0;
    std::size_t j = 0;
    for (const SearchStep& s : steps) {
      const std::uint64_t finish = std::max(t, s.not_before) + s.cycles;
      std::uint64_t last = 0;
      for (std::uint32_t n = 0; n < s.entries; ++n, ++j) {
        std::uint64_t a = finish + 1;
        if (j >= writes) a = std::max(a, write[j - writes] + 1);
        write[j] = last = a;
      }
      t = s.entries > 0 ? std::max(finish, last - 1) : finish;
      end = std::max({end, finish, last});
    }
    r.search_only = end;
  }

  // Coupled run: a slot frees when the compute core starts the entry that
  // occupied it; the query unit waits until its entries are written.
  std::vector<std::uint64_t> write(m), start(m);
  std::uint64_t t = 0, finish_last = 0, done = 0;
  std::size_t j = 0;
  for (const SearchStep& s : steps) {
    const std::uint64_t finish = std::max(t, s.not_before) + s.cycles;
    std::uint64_t last = 0;
    for (std::uint32_t n = 0; n < s.entries; ++n, ++j) {
      std::uint64_t a = finish + 1;
      if (j >= writes) a = std::max(a, write[j - writes] + 1);
      if (j >= capacity && start[j - capacity] > a) {
        r.stall_map_full += start[j - capacity] - a;
        a = start[j - capacity];
      }
      write[j] = last = a;
      const std::uint64_t st = std::max(a, done);
      if (a > done) r.stall_map_empty += a - done;
      start[j] = st;
      done = st + entry_cycles[j];
    }
    t = s.entries > 0 ? std::max(finish, last - 1) : finish;
    finish_last = std::max(finish_last, finish);
  }
  r.fine_total = std::max(finish_last, done);
  r.coarse_total = r.search_only + r.compute_only;
  r.total = cfg.mode == PipelineMode::FineGrained ? r.fine_total : r.coarse_total;
  r.overlap = r.search_only + r.compute_only - r.total;
  return r;
}

void SimReport::finalize() {
  totals = PipelineTiming{};
  ledger = TrafficLedger{};
  double parallel = 0, serial = 0, hash = 0, hash_parallel = 0, sparse = 0, dense = 0;
  double fine = 0, coarse = 0;
  for (const LayerSimReport& l : layers) {
    totals.accumulate(l.timing);
    ledger.merge(l.ledger);
    parallel += static_cast<double>(l.search_parallel.total);
    serial += static_cast<double>(l.search_serial.total);
    if (l.search_hash) {
      hash += static_cast<double>(l.search_hash->total);
      hash_parallel += static_cast<double>(l.search_parallel.total);
    }
    sparse += static_cast<double>(l.compute_sparse);
    dense += static_cast<double>(l.compute_dense);
    fine += static_cast<double>(l.timing.fine_total);
    coarse += static_cast<double>(l.timing.coarse_total);
  }
  search_speedup_parallel_vs_serial = ratio(serial, parallel);
  search_speedup_parallel_vs_hash = ratio(hash, hash_parallel);
  compute_speedup_sparse_vs_dense = ratio(dense, sparse);
  pipeline_speedup_fine_vs_coarse = ratio(coarse, fine);
}

}  // namespace spocta

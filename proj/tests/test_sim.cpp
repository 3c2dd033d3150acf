#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "spocta/error.hpp"
#include "spocta/search.hpp"
#include "spocta/sim.hpp"
#include "test_util.hpp"

using namespace spocta;

namespace {

SearchTrace interior_trace(std::size_t n) {
  SearchTrace t;
  t.op = OpKind::Subm3;
  t.block_sizes = {static_cast<std::uint32_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    VoxelQueryRecord r;
    r.voxel = static_cast<std::uint32_t>(i);
    r.query_cycles = 8;
    r.candidates = 27;
    r.hits = 27;
    t.voxels.push_back(r);
  }
  return t;
}

struct RandomTrace {
  std::vector<SearchStep> steps;
  std::vector<std::uint32_t> cycles;
  PipelineConfig cfg;
};

RandomTrace random_trace(std::mt19937_64& rng, bool allow_zero) {
  RandomTrace r;
  std::uniform_int_distribution<int> n_steps(1, 120);
  std::uniform_int_distribution<std::uint32_t> step_cycles(allow_zero ? 0 : 1, 12);
  std::uniform_int_distribution<std::uint32_t> entries(0, 27);
  std::uniform_int_distribution<std::uint32_t> work(allow_zero ? 0 : 1, 20);
  std::bernoulli_distribution gate(0.1);
  const int n = n_steps(rng);
  std::uint64_t clock = 0;
  for (int i = 0; i < n; ++i) {
    SearchStep s{step_cycles(rng), entries(rng), 0};
    clock += s.cycles;
    if (gate(rng)) s.not_before = clock + step_cycles(rng);
    r.steps.push_back(s);
    for (std::uint32_t e = 0; e < s.entries; ++e) r.cycles.push_back(work(rng));
  }
  const unsigned counts[] = {1, 2, 4, 8};
  r.cfg.fifo_count = counts[std::uniform_int_distribution<int>(0, 3)(rng)];
  r.cfg.fifo_depth = std::uniform_int_distribution<unsigned>(1, 8)(rng);
  r.cfg.filter_writes_per_cycle = std::uniform_int_distribution<unsigned>(1, 8)(rng);
  return r;
}

}  // namespace

TEST_CASE("parallel search spends 8 cycles per interior voxel, serial 27") {
  const SearchTrace t = interior_trace(10);
  const SearchCycles p = simulate_search(t, SearchMode::Parallel);
  const SearchCycles s = simulate_search(t, SearchMode::Serial);
  CHECK(p.query == 80);
  CHECK(s.query == 270);
  CHECK(p.build == 10);
  CHECK(s.build == 10);
  CHECK(1.0 - static_cast<double>(p.query) / static_cast<double>(s.query) == doctest::Approx(0.7037).epsilon(1e-3));
}

TEST_CASE("cross-block penalty is charged per batch in parallel mode and per query in serial mode") {
  SearchTrace t = interior_trace(1);
  t.voxels[0].cross_block = 5;
  t.voxels[0].cross_block_batches = 2;
  PipelineConfig cfg;
  cfg.cross_block_penalty = 3;
  CHECK(simulate_search(t, SearchMode::Parallel, cfg).penalty == 6);
  CHECK(simulate_search(t, SearchMode::Serial, cfg).penalty == 15);
  CHECK(simulate_search(t, SearchMode::Parallel, cfg).total == 1 + 8 + 6);
}

TEST_CASE("Gconv2 search costs one cycle per voxel") {
  std::mt19937_64 rng(1);
  for (std::size_t n : {1u, 17u, 400u}) {
    const auto cs = testutil::random_coords(rng, 40, n);
    const SearchTrace t = search_gconv2(cs).trace;
    CHECK(simulate_search(t, SearchMode::Parallel).query == n);
  }
}

TEST_CASE("hash timing needs probe counts") {
  const std::vector<Coordinate> cs{{1, 1, 1}, {1, 1, 2}};
  const SearchResult h = search_hash(cs, OpKind::Subm3);
  const SearchCycles c = simulate_search(h.trace, SearchMode::Hash);
  std::uint64_t probes = 0, cand = 0;
  for (std::size_t i = 0; i < h.trace.voxels.size(); ++i) {
    probes += h.trace.hash_probes[i];
    cand += h.trace.voxels[i].candidates;
  }
  CHECK(c.query == cand + probes);
  CHECK(c.build == h.trace.hash_insert_probes + 2);
  CHECK_THROWS_AS(simulate_search(search_subm3(cs).trace, SearchMode::Hash), Error);
}

TEST_CASE("Tconv2 search is the DRAM reload of its map") {
  SearchTrace t;
  t.op = OpKind::Tconv2;
  for (int i = 0; i < 10; ++i) t.voxels.push_back(VoxelQueryRecord{static_cast<std::uint32_t>(i), 0, 0, 0, 0, 0, 8});
  // 80 records x 9 bytes at 40 bytes per cycle.
  CHECK(simulate_search(t, SearchMode::Parallel).total == 18);
}

TEST_CASE("compute cycles per map entry") {
  const std::vector<std::uint16_t> dense{16};
  const std::vector<std::uint16_t> g1{1};
  CHECK(simulate_compute(dense, g1, 16, 16, false).total == 1);
  const std::vector<std::uint16_t> ten{10};
  CHECK(simulate_compute(ten, g1, 32, 16, true).total == 1);
  CHECK(simulate_compute(ten, g1, 32, 16, false).total == 2);
  const std::vector<std::uint16_t> g2{2};
  CHECK(simulate_compute(ten, g2, 32, 16, true, Granularity::Group).total == 2);
  const std::vector<std::uint16_t> none{0};
  const std::vector<std::uint16_t> g0{0};
  CHECK(simulate_compute(none, g0, 64, 40, true).total == 0);
  CHECK(simulate_compute(none, g0, 64, 40, false).total == 4 * 3);
  CHECK_THROWS_AS(simulate_compute(ten, {}, 32, 16, true, Granularity::Group), Error);
}

TEST_CASE("half-dense rows take about half the dense cycles at large C_in") {
  std::mt19937_64 rng(2);
  std::binomial_distribution<int> nnz(512, 0.5);
  std::vector<std::uint16_t> e(2000), g(2000, 32);
  for (auto& v : e) v = static_cast<std::uint16_t>(nnz(rng));
  const double ratio = static_cast<double>(simulate_compute(e, g, 512, 64, true).total) /
                       static_cast<double>(simulate_compute(e, g, 512, 64, false).total);
  CHECK(ratio == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("sparse compute never exceeds dense compute") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t c_in = std::uniform_int_distribution<std::size_t>(1, 300)(rng);
    std::uniform_int_distribution<std::size_t> nz(0, c_in);
    std::vector<std::uint16_t> e(100), g(100);
    for (std::size_t i = 0; i < 100; ++i) {
      e[i] = static_cast<std::uint16_t>(nz(rng));
      g[i] = static_cast<std::uint16_t>(std::min<std::size_t>(e[i], (c_in + 15) / 16));
    }
    for (Granularity gr : {Granularity::Bit, Granularity::Group}) {
      CHECK(simulate_compute(e, g, c_in, 48, true, gr).total <= simulate_compute(e, g, c_in, 48, false, gr).total);
    }
  }
}

TEST_CASE("pipeline config validation") {
  PipelineConfig c;
  CHECK_NOTHROW(c.validate());
  c.fifo_count = 6;
  CHECK_THROWS_AS(c.validate(), Error);
  c = PipelineConfig{};
  c.query_banks = 3;
  CHECK_THROWS_AS(c.validate(), Error);
  c = PipelineConfig{};
  c.fifo_depth = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = PipelineConfig{};
  CHECK(c.fifo_capacity() == 128);
  CHECK(c.dram_bytes_per_cycle() == doctest::Approx(40.0));
  CHECK(c.dram_cycles(0) == 0);
  CHECK(c.dram_cycles(41) == 2);
}

TEST_CASE("empty consumer leaves the search time") {
  const std::vector<SearchStep> steps{{5, 0, 0}, {7, 0, 0}};
  const PipelineTiming t = simulate_pipeline(steps, {}, PipelineConfig{});
  CHECK(t.search_only == 12);
  CHECK(t.compute_only == 0);
  CHECK(t.fine_total == 12);
  CHECK(t.coarse_total == 12);
}

TEST_CASE("step and compute entry counts must agree") {
  const std::vector<SearchStep> steps{{1, 2, 0}};
  const std::vector<std::uint32_t> one{3};
  CHECK_THROWS_AS(simulate_pipeline(steps, one, PipelineConfig{}), Error);
}

TEST_CASE("deep FIFO: closed-form timing for a regular trace") {
  // n steps of s cycles, one entry each, c cycles per entry. Entry j is
  // written at (j+1)s + 1 and the consumer never waits on a full table.
  for (auto [n, s, c] : {std::tuple{50, 3, 1}, std::tuple{50, 1, 4}, std::tuple{40, 2, 2}}) {
    std::vector<SearchStep> steps(n, SearchStep{static_cast<std::uint32_t>(s), 1, 0});
    std::vector<std::uint32_t> cycles(n, static_cast<std::uint32_t>(c));
    PipelineConfig cfg;
    cfg.fifo_depth = 64;
    const PipelineTiming t = simulate_pipeline(steps, cycles, cfg);
    std::uint64_t end = 0;
    for (int j = 0; j < n; ++j) {
      end = std::max<std::uint64_t>(end, static_cast<std::uint64_t>((j + 1) * s + 1 + (n - j) * c));
    }
    CHECK(t.search_only == static_cast<std::uint64_t>(n * s + 1));
    CHECK(t.fine_total == end);
    CHECK(t.stall_map_full == 0);
    CHECK(t.coarse_total == t.search_only + static_cast<std::uint64_t>(n * c));
  }
}

TEST_CASE("a one-slot table serializes search behind compute") {
  // Entry j+1 cannot be written before entry j starts computing.
  std::vector<SearchStep> steps(4, SearchStep{1, 1, 0});
  std::vector<std::uint32_t> cycles(4, 10);
  PipelineConfig cfg;
  cfg.fifo_count = 1;
  cfg.fifo_depth = 1;
  const PipelineTiming t = simulate_pipeline(steps, cycles, cfg);
  CHECK(t.fine_total == 2 + 40);
  CHECK(t.stall_map_full > 0);
}

TEST_CASE("compute-bound layers gain little from the pipeline") {
  std::vector<SearchStep> steps(200, SearchStep{8, 10, 0});
  std::vector<std::uint32_t> cycles(2000, 8 * 4);  // C_in = 128, C_out = 64
  const PipelineTiming t = simulate_pipeline(steps, cycles, PipelineConfig{});
  CHECK(static_cast<double>(t.fine_total) / static_cast<double>(t.compute_only) < 1.01);
  CHECK(t.fine_total >= t.compute_only);
}

TEST_CASE("pipeline bounds on random traces") {
  std::mt19937_64 rng(4);
  int strict_checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const bool zero_ok = trial % 2 == 0;
    RandomTrace r = random_trace(rng, zero_ok);
    r.cfg.mode = trial % 3 == 0 ? PipelineMode::CoarseGrained : PipelineMode::FineGrained;
    const PipelineTiming t = simulate_pipeline(r.steps, r.cycles, r.cfg);
    CHECK(std::max(t.search_only, t.compute_only) <= t.fine_total);
    CHECK(t.fine_total <= t.coarse_total);
    CHECK(t.coarse_total == t.search_only + t.compute_only);
    CHECK(t.total == (r.cfg.mode == PipelineMode::FineGrained ? t.fine_total : t.coarse_total));
    CHECK(t.overlap == t.search_only + t.compute_only - t.total);

    std::size_t producing = 0;
    for (const auto& s : r.steps) producing += s.entries > 0;
    if (!zero_ok && producing >= 2 && r.cfg.fifo_depth >= 2) {
      ++strict_checked;
      CHECK(t.fine_total < t.coarse_total);
    }
  }
  CHECK(strict_checked > 50);
}

TEST_CASE("a deeper map table never slows the pipeline") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    RandomTrace r = random_trace(rng, trial % 2 == 0);
    std::uint64_t prev = ~0ull;
    for (unsigned depth = 1; depth <= 32; depth *= 2) {
      r.cfg.fifo_depth = depth;
      const std::uint64_t total = simulate_pipeline(r.steps, r.cycles, r.cfg).fine_total;
      CHECK(total <= prev);
      prev = total;
    }
  }
}

TEST_CASE("search schedule for table-aided search") {
  std::mt19937_64 rng(6);
  const auto cs = testutil::random_coords(rng, 40, 800);
  const SearchTrace t = search_subm3(cs).trace;
  PipelineConfig cfg;
  auto steps = search_schedule(t, cfg);
  CHECK(steps.size() == t.voxels.size());
  std::uint64_t entries = 0;
  for (const auto& s : steps) entries += s.entries;
  std::uint64_t hits = 0;
  for (const auto& v : t.voxels) hits += v.hits;
  CHECK(entries == hits);
  // Every query waits for its block's table.
  std::uint64_t built = 0;
  std::uint32_t block = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i == 0 || t.voxels[i].block != block) {
      block = t.voxels[i].block;
      built = 0;
      for (std::uint32_t b = 0; b <= block; ++b) built += t.block_sizes[b];
    }
    CHECK(steps[i].not_before == built);
  }

  cfg.overlap_table_build = false;
  steps = search_schedule(t, cfg);
  CHECK(steps.size() == t.voxels.size() + t.block_sizes.size());
  const std::vector<std::uint32_t> none(entries, 0);
  PipelineConfig serial = cfg;
  const auto a = simulate_pipeline(search_schedule(t, serial), none, serial);
  PipelineConfig overlapped;
  const auto b = simulate_pipeline(search_schedule(t, overlapped), none, overlapped);
  CHECK(b.search_only <= a.search_only);
}

TEST_CASE("simulation is deterministic") {
  std::mt19937_64 rng(7);
  const RandomTrace r = random_trace(rng, true);
  const PipelineTiming a = simulate_pipeline(r.steps, r.cycles, r.cfg);
  const PipelineTiming b = simulate_pipeline(r.steps, r.cycles, r.cfg);
  CHECK(a.fine_total == b.fine_total);
  CHECK(a.stall_map_full == b.stall_map_full);
  CHECK(a.stall_map_empty == b.stall_map_empty);
}

// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

#include "spocta/cli/commands.hpp"
#include "spocta/cli/network.hpp"
#include "spocta/cli/runner.hpp"
#include "spocta/cli/scene_gen.hpp"
#include "spocta/exec.hpp"
#include "spocta/inout_map.hpp"
#include "spocta/masks.hpp"
#include "spocta/memory.hpp"
#include "spocta/octree.hpp"
#include "spocta/octree_table.hpp"
#include "spocta/pnelut.hpp"
#include "spocta/reference_conv.hpp"
#include "spocta/search.hpp"
#include "spocta/sim.hpp"
#include "test_util.hpp"

using namespace spocta;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kFloatRel = 1e-4;
constexpr double kReductionTol = 1e-4;
constexpr double kSpeedupLo = 6.0, kSpeedupHi = 27.0;
constexpr double kSparsityTol = 0.05;
constexpr double kMidLo = 0.45, kMidHi = 0.83;
constexpr double kCacheSaving = 0.25;

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("criterion %d: %s  %s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int random_extent(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(rng));
}

const OpKind kOps[] = {OpKind::Subm3, OpKind::Gconv2, OpKind::Gconv3, OpKind::Tconv2};

Outcome map_search_correctness() {
  std::mt19937_64 rng(101);
  std::size_t bad = 0, scenes = 0, entries = 0;
  std::string first;
  for (OpKind op : kOps) {
    for (int i = 0; i < 100; ++i) {
      const int extent = random_extent(rng, 8, 64);
      const auto cs = testutil::random_scene(rng, extent, log_uniform(rng, 0.001, 0.1));
      std::vector<CoordTriple> got, want;
      if (op == OpKind::Tconv2) {
        const InOutMap down = search_gconv2(cs).map;
        const InOutMap up = transpose_map(down, cs);
        got = canonical_triples(up, down.out_coords);
        want = canonical_triples(search_bruteforce(down.out_coords, op, cs), down.out_coords);
      } else {
        const InOutMap m = op == OpKind::Subm3    ? search_subm3(cs).map
                           : op == OpKind::Gconv2 ? search_gconv2(cs).map
                                                  : search_gconv3(cs).map;
        got = canonical_triples(m, cs);
        want = canonical_triples(search_bruteforce(cs, op), cs);
      }
      ++scenes;
      entries += want.size();
      if (got != want) {
        ++bad;
        if (first.empty()) first = std::string(" first: ") + std::string(to_string(op)) + " scene " + std::to_string(i);
      }
    }
  }
  return {bad == 0, std::to_string(scenes - bad) + "/" + std::to_string(scenes) + " scenes set-equal, " +
                        std::to_string(entries) + " entries" + first};
}

template <typename T>
std::optional<std::string> check_layer(OpKind op, std::mt19937_64& rng) {
  const int extent = random_extent(rng, 6, 32);
  const auto fine = testutil::random_scene(rng, extent, log_uniform(rng, 0.005, 0.1));
  const std::size_t c_in = std::uniform_int_distribution<std::size_t>(1, 24)(rng);
  const std::size_t c_out = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
  const auto w = testutil::random_weights<T>(kernel_size(op), c_out, c_in, rng);
  LayerSpec s = testutil::make_spec(op, c_in, c_out);

  InOutMap map;
  std::vector<Coordinate> in_coords = fine, sites;
  switch (op) {
    case OpKind::Subm3: map = search_subm3(fine).map; break;
    case OpKind::Gconv2: map = search_gconv2(fine).map; break;
    case OpKind::Gconv3: map = search_gconv3(fine).map; break;
    case OpKind::Tconv2: {
      const InOutMap down = search_gconv2(fine).map;
      in_coords = down.out_coords;
      sites = fine;
      map = transpose_map(down, fine);
      s.paired_layer = 0;
      break;
    }
  }
  const auto t = testutil::random_tensor<T>(in_coords, c_in, rng);
  const auto e = static_cast<std::uint16_t>(extent);
  if constexpr (std::is_same_v<T, float>) {
    s.postprocess = {PostOp::relu()};
    const FloatTensor got = execute_layer(t, w, map, s);
    return testutil::diff_tensors(got, dense_oracle_conv(t, w, s, Coordinate{e, e, e}, sites), kFloatRel);
  } else {
    s.quant = QuantParams{0.02f, 0.5f, 0.05f};
    std::vector<float> scale(c_out), shift(c_out);
    for (std::size_t c = 0; c < c_out; ++c) {
      scale[c] = 0.75f + 0.01f * static_cast<float>(c);
      shift[c] = static_cast<float>(c % 7) - 3.0f;
    }
    s.postprocess = {PostOp::requantize(), PostOp::batch_norm(scale, shift), PostOp::relu()};
    return testutil::diff_tensors(execute_layer(t, w, map, s), testutil::naive_int8_conv(t, w, s, sites));
  }
}

Outcome convolution_correctness() {
  std::mt19937_64 rng(202);
  std::size_t bad_f = 0, bad_q = 0;
  std::string first;
  for (OpKind op : kOps) {
    for (int i = 0; i < 50; ++i) {
      if (auto d = check_layer<float>(op, rng)) {
        ++bad_f;
        if (first.empty()) first = std::string(" first: float ") + std::string(to_string(op)) + " " + *d;
      }
      if (auto d = check_layer<std::int8_t>(op, rng)) {
        ++bad_q;
        if (first.empty()) first = std::string(" first: int8 ") + std::string(to_string(op)) + " " + *d;
      }
    }
  }
  return {bad_f == 0 && bad_q == 0,
          "float " + std::to_string(200 - bad_f) + "/200 within 1e-4 of dense oracle, int8 " +
              std::to_string(200 - bad_q) + "/200 bit-exact" + first};
}

Outcome search_parallelization() {
  // A fully occupied 16^3 block; interior voxels never leave it.
  std::vector<Coordinate> block;
  for (std::uint16_t z = 0; z < 16; ++z)
    for (std::uint16_t y = 0; y < 16; ++y)
      for (std::uint16_t x = 0; x < 16; ++x) block.push_back({x, y, z});
  const SearchResult r = search_subm3(block);
  SearchTrace interior;
  interior.op = OpKind::Subm3;
  bool exact = true;
  for (const VoxelQueryRecord& v : r.trace.voxels) {
    const Coordinate c = block[v.voxel];
    const auto in = [](std::uint16_t a) { return a >= 1 && a <= 14; };
    if (!(in(c.x) && in(c.y) && in(c.z))) continue;
    exact = exact && v.query_cycles == 8 && v.candidates == 27 && v.hits == 27 && v.cross_block_batches == 0;
    interior.voxels.push_back(v);
  }
  const auto par = simulate_search(interior, SearchMode::Parallel);
  const auto ser = simulate_search(interior, SearchMode::Serial);
  const double n = static_cast<double>(interior.voxels.size());
  const double reduction = 1.0 - static_cast<double>(par.query) / static_cast<double>(ser.query);
  exact = exact && par.query == 8 * interior.voxels.size() && ser.query == 27 * interior.voxels.size() &&
          std::fabs(reduction - (1.0 - 8.0 / 27.0)) < kReductionTol;

  // End-to-end ratio against the hash-table baseline on uniform scenes.
  double lo = 1e9, hi = 0, lo0 = 1e9, hi0 = 0;
  PipelineConfig no_penalty;
  no_penalty.cross_block_penalty = 0;
  for (auto [extent, density] : {std::pair{64, 0.01}, std::pair{64, 0.05}, std::pair{128, 0.01}}) {
    const auto cs = generate_coords(static_cast<std::uint16_t>(extent), density, Distribution::Uniform, 7);
    const SearchTrace oct = search_subm3(cs).trace;
    const SearchTrace hash = search_hash(cs, OpKind::Subm3).trace;
    const double h = static_cast<double>(simulate_search(hash, SearchMode::Hash).total);
    const double ratio = h / static_cast<double>(simulate_search(oct, SearchMode::Parallel).total);
    const double ratio0 = h / static_cast<double>(simulate_search(oct, SearchMode::Parallel, no_penalty).total);
    lo = std::min(lo, ratio), hi = std::max(hi, ratio);
    lo0 = std::min(lo0, ratio0), hi0 = std::max(hi0, ratio0);
  }
  const bool in_band = lo >= kSpeedupLo && hi <= kSpeedupHi;
  return {exact && in_band,
          std::string(exact ? "exact" : "MISMATCH") + ": " + fmt("%.0f", n) + " interior voxels, " +
              fmt("%.1f", static_cast<double>(par.query) / n) + " vs " +
              fmt("%.1f", static_cast<double>(ser.query) / n) + " cycles/voxel, reduction " +
              fmt("%.4f", reduction) + "; hash/parallel search ratio " + fmt("%.2f", lo) + "-" + fmt("%.2f", hi) +
              (in_band ? " in" : " outside") + " [6, 27] (cross-block penalty 0: " + fmt("%.2f", lo0) + "-" +
              fmt("%.2f", hi0) + ")"};
}

Outcome sparsity_speedup() {
  std::mt19937_64 rng(404);
  const auto coords = testutil::random_coords(rng, 32, 1500);
  const InOutMap map = search_subm3(coords).map;
  bool pass = true;
  std::string detail;
  for (double d : {0.4, 0.5, 0.6}) {
    for (std::size_t c_in : {128u, 256u, 512u}) {
      QuantTensor t;
      t.coords = coords;
      t.channels = c_in;
      t.features.assign(coords.size() * c_in, 0);
      std::bernoulli_distribution on(d);
      for (auto& f : t.features) f = on(rng) ? 1 : 0;
      const auto masks = build_masks(t);
      std::vector<std::uint16_t> nnz, groups;
      for (const MapEntry& e : map.entries) {
        nnz.push_back(static_cast<std::uint16_t>(masks[e.in].popcount()));
        groups.push_back(static_cast<std::uint16_t>(masks[e.in].nonzero_groups()));
      }
      const double ratio = static_cast<double>(simulate_compute(nnz, groups, c_in, 64, true).total) /
                           static_cast<double>(simulate_compute(nnz, groups, c_in, 64, false).total);
      const bool ok = std::fabs(ratio - d) <= kSparsityTol;
      pass = pass && ok;
      detail += " d=" + fmt("%.1f", d) + "/C" + std::to_string(c_in) + ":" + fmt("%.3f", ratio) + (ok ? "" : "!");
    }
  }
  return {pass, "sparse/dense compute cycles (! = outside d +/- 0.05):" + detail};
}

Outcome pipeline_bounds() {
  std::mt19937_64 rng(505);
  std::size_t violations = 0, strict = 0, strict_fail = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const bool zeros = trial % 2 == 1;
    std::uniform_int_distribution<std::uint32_t> step_cycles(zeros ? 0 : 1, 12), entries(0, 27),
        work(zeros ? 0 : 1, 24);
    std::vector<SearchStep> steps(std::uniform_int_distribution<int>(1, 200)(rng));
    std::vector<std::uint32_t> cycles;
    std::uint64_t clock = 0;
    std::size_t producing = 0;
    for (SearchStep& s : steps) {
      s.cycles = step_cycles(rng);
      s.entries = entries(rng);
      clock += s.cycles;
      if (std::bernoulli_distribution(0.1)(rng)) s.not_before = clock + step_cycles(rng);
      producing += s.entries > 0;
      for (std::uint32_t e = 0; e < s.entries; ++e) cycles.push_back(work(rng));
    }
    PipelineConfig cfg;
    cfg.fifo_count = 1u << std::uniform_int_distribution<int>(0, 3)(rng);
    cfg.fifo_depth = std::uniform_int_distribution<unsigned>(1, 16)(rng);
    cfg.filter_writes_per_cycle = std::uniform_int_distribution<unsigned>(1, 8)(rng);
    const PipelineTiming t = simulate_pipeline(steps, cycles, cfg);
    if (!(std::max(t.search_only, t.compute_only) <= t.fine_total && t.fine_total <= t.coarse_total &&
          t.coarse_total == t.search_only + t.compute_only)) {
      ++violations;
    }
    // Non-trivial: every search step and every entry takes work, and entries
    // come from at least two steps.
    if (!zeros && producing >= 2 && cfg.fifo_depth >= 2) {
      ++strict;
      if (!(t.fine_total < t.coarse_total)) ++strict_fail;
    }
  }
  return {violations == 0 && strict_fail == 0 && strict > 0,
          "200 traces, " + std::to_string(violations) + " bound violations, fine < coarse on " +
              std::to_string(strict - strict_fail) + "/" + std::to_string(strict) + " non-trivial traces"};
}

Outcome non_uniform_caching() {
  const auto coords = generate_coords(64, 0.01, Distribution::SurfaceLike, 3);
  const double mid = partition_shares(search_subm3(coords).map).mid;
  const bool band = mid >= kMidLo && mid <= kMidHi;

  QuantTensor input;
  input.coords = coords;
  input.channels = 64;
  input.features.assign(coords.size() * 64, 1);
  const auto net = std::get<QuantNetwork>(make_network(NetworkPreset::Identity, 64, Dtype::Int8, 1));
  RunOptions opts;
  opts.hash_baseline = false;
  const auto fwd = run_forward(input, net, opts);
  const std::size_t weight_bytes = 27 * 64 * 64;

  auto traffic = [&](Allocation a, std::size_t total) {
    RunOptions o = opts;
    o.cache.allocation = a;
    o.cache_total_bytes = total;
    const SimReport rep = model_run(fwd.layers, o);
    std::uint64_t bytes = rep.layers[0].weight_stream.bytes_fetched;
    for (const auto& p : rep.layers[0].weight_cache) bytes += p.bytes_fetched;
    return static_cast<double>(bytes);
  };
  bool pass = band;
  std::string detail = "mid share " + fmt("%.3f", mid) + (band ? " in band;" : " OUT OF BAND;");
  for (std::size_t factor : {2u, 4u}) {
    const std::size_t total = weight_bytes / factor;
    const double u = traffic(Allocation::Uniform, total);
    const double n = traffic(Allocation::NonUniform, total);
    const double saving = 1.0 - n / u;
    pass = pass && saving >= kCacheSaving;
    detail += " weights " + std::to_string(factor) + "x cache: DRAM weight bytes " + fmt("%.0f", n) + " vs " +
              fmt("%.0f", u) + " uniform, saving " + fmt("%.1f%%", 100.0 * saving) + ";";
  }
  return {pass, detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

Outcome determinism() {
  // Each run works in its own directory with the same file names, since a
  // network file names its weight file.
  const fs::path root = fs::temp_directory_path() / ("spocta_accept_" + std::to_string(::getpid()));
  const std::vector<std::string> files{"scene.spvx", "net.json", "net.spwt", "out.spvx",
                                       "report.json", "energy.json", "search.json", "sweep.csv"};
  for (const char* run : {"1", "2"}) {
    const fs::path dir = root / run;
    fs::create_directories(dir);
    auto p = [&](const std::string& n) { return (dir / n).string(); };
    std::ofstream(p("sweep_spec.json")) << R"({"grid": {"allocation": ["uniform", "non-uniform"],
                                                       "fifo_depth": [2, 16]}})";
    const std::vector<std::vector<std::string>> cmds{
        {"gen", "--extent", "48", "--density", "0.02", "--distribution", "surface", "--seed", "5", "--channels",
         "16", "-o", p("scene.spvx")},
        {"gen-net", "--preset", "unet", "--channels", "16", "--seed", "5", "-o", p("net.json")},
        {"run", p("scene.spvx"), p("net.json"), "--threads", std::string(run) == "1" ? "1" : "4", "-o",
         p("out.spvx"), "--report", p("report.json"), "--energy-report", p("energy.json")},
        {"search", p("scene.spvx"), "--op", "subm3", "--report", p("search.json")},
        {"sweep", p("scene.spvx"), p("net.json"), "--spec", p("sweep_spec.json"), "-o", p("sweep.csv")},
    };
    for (const auto& c : cmds) {
      std::ostringstream out, err;
      if (run_cli(c, out, err) != 0) return {false, c[0] + " failed: " + err.str()};
    }
  }
  std::size_t differ = 0;
  std::string which;
  for (const std::string& f : files) {
    const std::string a = slurp(root / "1" / f);
    if (a.empty() || a != slurp(root / "2" / f)) {
      ++differ;
      which += " " + f;
    }
  }
  fs::remove_all(root);
  return {differ == 0, std::to_string(files.size() - differ) + "/" + std::to_string(files.size()) +
                           " output files byte-identical across two runs" + which};
}

Outcome invariant_suite() {
  std::mt19937_64 rng(808);
  std::string detail;
  bool pass = true;

  std::uniform_int_distribution<unsigned> u16(0, 0xffff);
  std::size_t bijective = 0;
  for (int i = 0; i < 100000; ++i) {
    const Coordinate c{static_cast<std::uint16_t>(u16(rng)), static_cast<std::uint16_t>(u16(rng)),
                       static_cast<std::uint16_t>(u16(rng))};
    const OctreeCode code = encode(c, kMaxLevels);
    bijective += decode(code) == c && encode(decode(code), kMaxLevels) == code;
  }
  pass = pass && bijective == 100000;
  detail += "encode/decode " + std::to_string(bijective) + "/100000;";

  const std::vector<std::size_t> expected{1, 2, 2, 2, 4, 4, 4, 8};
  std::size_t lut_ok = 0;
  for (std::uint8_t parity = 0; parity < 8; ++parity) {
    std::vector<std::size_t> lengths;
    for (const auto& row : pnelut_for(parity).rows) lengths.push_back(row.size);
    std::sort(lengths.begin(), lengths.end());
    lut_ok += lengths == expected;
  }
  pass = pass && lut_ok == 8;
  detail += " PNELUT multisets " + std::to_string(lut_ok) + "/8;";

  // Every batch of every center position in a block, including neighbors in
  // adjacent blocks, must address eight distinct banks.
  std::size_t batches = 0, conflicts = 0;
  for (std::uint16_t z = 16; z < 32; ++z)
    for (std::uint16_t y = 16; y < 32; ++y)
      for (std::uint16_t x = 16; x < 32; ++x) {
        const Coordinate c{x, y, z};
        const Pnelut& lut = pnelut_for(static_cast<std::uint8_t>(bank_of(local_of(c))));
        for (std::size_t k = 0; k < lut.max_row_length(); ++k) {
          unsigned used = 0;
          for (const auto& row : lut.rows) {
            if (k >= row.size) continue;
            const Offset d = row.items[k].delta;
            const Coordinate t{static_cast<std::uint16_t>(x + d.dx), static_cast<std::uint16_t>(y + d.dy),
                               static_cast<std::uint16_t>(z + d.dz)};
            const unsigned bit = 1u << bank_of(local_of(t));
            conflicts += (used & bit) != 0;
            used |= bit;
          }
          ++batches;
        }
      }
  std::size_t traced = 0;
  for (int i = 0; i < 20; ++i) {
    const auto cs = testutil::random_scene(rng, 64, log_uniform(rng, 0.001, 0.1));
    const SearchTrace t = search_subm3(cs).trace;
    conflicts += t.bank_conflicts;
    traced += t.query_batches;
  }
  pass = pass && conflicts == 0;
  detail += " bank conflicts " + std::to_string(conflicts) + " over " + std::to_string(batches + traced) +
            " batches;";

  std::size_t non_monotone = 0, sweeps = 0;
  std::discrete_distribution<int> plane({1, 3, 1});
  std::uniform_int_distribution<int> d9(0, 8);
  for (std::size_t c_out : {16u, 40u, 64u}) {
    const LayerGeometry g{3, 32, c_out, 1};
    std::uniform_int_distribution<std::uint32_t> tile(0, static_cast<std::uint32_t>(g.tiles() - 1));
    std::vector<std::pair<std::uint8_t, std::uint32_t>> stream;
    for (int i = 0; i < 5000; ++i) stream.emplace_back(static_cast<std::uint8_t>(plane(rng) * 9 + d9(rng)), tile(rng));
    for (Allocation a : {Allocation::Uniform, Allocation::NonUniform}) {
      std::uint64_t prev = ~0ull;
      for (std::size_t cap = g.tap_bytes(); cap <= g.total_bytes() + 2048; cap += 256) {
        const CacheConfig cfg = a == Allocation::Uniform
                                    ? CacheConfig::uniform(cap)
                                    : CacheConfig::non_uniform_for_total(cap, g.tap_bytes(), 8 * g.tap_bytes());
        WeightCache cache(cfg, g);
        for (const auto& [k, t] : stream) cache.access(k, t);
        non_monotone += cache.total().misses > prev;
        prev = cache.total().misses;
        ++sweeps;
      }
    }
  }
  pass = pass && non_monotone == 0;
  detail += " cache misses non-increasing at " + std::to_string(sweeps - non_monotone) + "/" +
            std::to_string(sweeps) + " capacity steps";
  return {pass, detail};
}

}  // namespace

int main() {
  report(1, map_search_correctness);
  report(2, convolution_correctness);
  report(3, search_parallelization);
  report(4, sparsity_speedup);
  report(5, pipeline_bounds);
  report(6, non_uniform_caching);
  report(7, determinism);
  report(8, invariant_suite);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

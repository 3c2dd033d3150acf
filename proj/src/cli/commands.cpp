#include "spocta/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "spocta/cli/config.hpp"
#include "spocta/cli/network.hpp"
#include "spocta/cli/report.hpp"
#include "spocta/cli/runner.hpp"
#include "spocta/cli/scene_file.hpp"
#include "spocta/cli/scene_gen.hpp"
#include "spocta/error.hpp"
#include "spocta/map_io.hpp"

namespace spocta {

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot write " + path);
  os << text;
  if (!os) throw Error(ErrorCode::Io, "write failed for " + path);
}

// Grid extent of every layer's output, derived from the scene extent.
std::vector<Coordinate> layer_extents(const std::vector<LayerSpec>& specs, Coordinate input) {
  std::vector<Coordinate> in(specs.size() + 1);
  in[0] = input;
  auto each = [](Coordinate c, auto f) {
    return Coordinate{static_cast<std::uint16_t>(f(c.x)), static_cast<std::uint16_t>(f(c.y)),
                      static_cast<std::uint16_t>(f(c.z))};
  };
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const Coordinate e = in[i];
    switch (specs[i].op) {
      case OpKind::Subm3: in[i + 1] = e; break;
      case OpKind::Gconv2: in[i + 1] = each(e, [](int v) { return (v + 1) / 2; }); break;
      case OpKind::Gconv3: in[i + 1] = each(e, [](int v) { return v / 2 + 1; }); break;
      case OpKind::Tconv2: in[i + 1] = in[*specs[i].paired_layer]; break;
    }
  }
  return in;
}

struct SceneRun {
  Scene output;
  std::vector<LayerTrace> traces;
};

SceneRun run_scene(const Scene& scene, const AnyNetwork& any, const RunOptions& options) {
  if (scene.tensor.index() != any.index()) {
    throw Error(ErrorCode::ConfigInvalid, std::string("scene is ") + std::string(to_string(scene.dtype())) +
                                              " but the network is " +
                                              (any.index() == 0 ? "int8" : "float32"));
  }
  SceneRun r;
  std::visit(
      [&](const auto& net) {
        using T = typename std::decay_t<decltype(net.layers.front().weights.values)>::value_type;
        const auto& input = std::get<SparseTensor<T>>(scene.tensor);
        ForwardResult<T> fwd = run_forward(input, net, options);
        std::vector<LayerSpec> specs;
        for (const auto& l : net.layers) specs.push_back(l.spec);
        r.output.extent = layer_extents(specs, scene.extent).back();
        r.output.tensor = std::move(fwd.output);
        r.traces = std::move(fwd.layers);
      },
      any);
  return r;
}

struct CommonRunFlags {
  bool oracle = false;
  bool dense_compute = false;
  std::string pipeline;
  std::string energy_table;
  std::string config;
  std::string granularity;
  unsigned threads = 1;
};

void add_run_flags(CLI::App* cmd, CommonRunFlags& f) {
  cmd->add_flag("--oracle", f.oracle, "Check every map and layer output against the oracles");
  cmd->add_flag("--dense-compute", f.dense_compute, "Model compute without zero skipping");
  cmd->add_option("--pipeline", f.pipeline, "Pipeline mode")->check(CLI::IsMember({"fine", "coarse"}));
  cmd->add_option("--energy-table", f.energy_table, "Energy table file")->check(CLI::ExistingFile);
  cmd->add_option("--config", f.config, "Flat JSON object of model knobs")->check(CLI::ExistingFile);
  cmd->add_option("--granularity", f.granularity, "Zero-skip granularity")
      ->check(CLI::IsMember({"bit", "group"}));
  cmd->add_option("--threads", f.threads, "Worker threads for layer execution")
      ->check(CLI::Range(1u, 256u));
}

RunOptions options_from(const CommonRunFlags& f) {
  RunOptions o;
  if (!f.config.empty()) apply_config(o, load_json_file(f.config));
  Json flags = Json::object();
  if (!f.pipeline.empty()) flags["pipeline"] = f.pipeline;
  if (!f.granularity.empty()) flags["granularity"] = f.granularity;
  if (f.dense_compute) flags["sparse_compute"] = false;
  apply_config(o, flags);
  o.oracle = f.oracle;
  o.threads = f.threads;
  if (!f.energy_table.empty()) o.energy = EnergyTable::load(f.energy_table);
  return o;
}

Json energy_json(const SimReport& rep, const EnergyTable& table) {
  Json layers = Json::array();
  for (const LayerSimReport& l : rep.layers) {
    Json e = to_json(energy_report(l.ledger, table));
    layers.push_back(Json{{"layer", l.layer_id}, {"op", to_string(l.op)}, {"energy", e}});
  }
  return Json{{"total", to_json(energy_report(rep.ledger, table))}, {"layers", layers}};
}

// ---------------------------------------------------------------- gen

struct GenFlags {
  unsigned extent = 64;
  double density = 0.01;
  std::string distribution = "uniform";
  std::uint64_t seed = 0;
  std::size_t channels = 16;
  std::string dtype = "int8";
  double feature_density = 0.5;
  std::string output;
};

int cmd_gen(const GenFlags& f, std::ostream& out) {
  GenOptions g;
  if (f.extent == 0 || f.extent > 0xffff) throw Error(ErrorCode::ConfigInvalid, "extent must be in [1, 65535]");
  g.extent = static_cast<std::uint16_t>(f.extent);
  g.density = f.density;
  g.distribution = parse_distribution(f.distribution);
  g.seed = f.seed;
  g.channels = f.channels;
  g.dtype = parse_dtype(f.dtype);
  g.feature_density = f.feature_density;
  const Scene s = generate_scene(g);
  save_scene(f.output, s);
  out << "wrote " << s.coords().size() << " voxels (" << to_string(s.dtype()) << ", C=" << s.channels()
      << ") to " << f.output << "\n";
  return 0;
}

// ---------------------------------------------------------------- gen-net

struct GenNetFlags {
  std::string preset = "unet";
  std::size_t channels = 16;
  std::string dtype = "int8";
  std::uint64_t seed = 0;
  std::string output;
};

int cmd_gen_net(const GenNetFlags& f, std::ostream& out) {
  const AnyNetwork net = make_network(parse_preset(f.preset), f.channels, parse_dtype(f.dtype), f.seed);
  save_network(f.output, net);
  const std::size_t n = std::visit([](const auto& n) { return n.layers.size(); }, net);
  out << "wrote " << n << "-layer network to " << f.output << "\n";
  return 0;
}

// ---------------------------------------------------------------- search

struct SearchFlags {
  std::string scene;
  std::string op;
  std::string map;
  std::string report;
  std::string config;
  bool no_hash = false;
};

int cmd_search(const SearchFlags& f, std::ostream& out) {
  RunOptions o;
  if (!f.config.empty()) apply_config(o, load_json_file(f.config));
  const Scene scene = load_scene(f.scene);
  const OpKind op = parse_op_kind(f.op);
  const auto coords = scene.coords();

  SearchResult r;
  std::optional<SearchTrace> hash;
  if (op == OpKind::Tconv2) {
    // Upsample the coarsened scene back onto its own sites.
    const SearchResult down = search_gconv2(coords);
    r.map = transpose_map(down.map, coords);
    r.trace = reload_trace(r.map, down.map.out_coords.size());
  } else {
    r = op == OpKind::Subm3 ? search_subm3(coords) : op == OpKind::Gconv2 ? search_gconv2(coords)
                                                                          : search_gconv3(coords);
    if (!f.no_hash) hash = search_hash(coords, op).trace;
  }
  if (!f.map.empty()) save_map(f.map, r.map);
  const std::string text = dump(search_stats_json(r.trace, r.map, hash, o.pipeline));
  if (f.report.empty()) {
    out << text;
  } else {
    write_text(f.report, text);
    out << r.map.entries.size() << " map entries for " << coords.size() << " voxels\n";
  }
  return 0;
}

// ---------------------------------------------------------------- run

struct RunFlags {
  std::string scene;
  std::string network;
  std::string output;
  std::string report;
  std::string energy_report;
  CommonRunFlags common;
};

Json run_report(const Scene& scene, const SceneRun& run, const SimReport& rep, const EnergyTable& table) {
  return Json{{"input", Json{{"voxels", scene.coords().size()},
                             {"channels", scene.channels()},
                             {"dtype", to_string(scene.dtype())}}},
              {"output", Json{{"voxels", run.output.coords().size()}, {"channels", run.output.channels()}}},
              {"sim", to_json(rep)},
              {"energy_pj", energy_report(rep.ledger, table).total_pj}};
}

int cmd_run(const RunFlags& f, std::ostream& out) {
  const RunOptions o = options_from(f.common);
  const Scene scene = load_scene(f.scene);
  const AnyNetwork net = load_network(f.network);
  const SceneRun run = run_scene(scene, net, o);
  const SimReport rep = model_run(run.traces, o);
  if (!f.output.empty()) save_scene(f.output, run.output);
  if (!f.report.empty()) write_text(f.report, dump(run_report(scene, run, rep, o.energy)));
  if (!f.energy_report.empty()) write_text(f.energy_report, dump(energy_json(rep, o.energy)));
  out << run.traces.size() << " layers, " << run.output.coords().size() << " output voxels, "
      << rep.totals.total << " cycles (" << (o.pipeline.mode == PipelineMode::FineGrained ? "fine" : "coarse")
      << ")";
  if (o.oracle) out << ", oracle ok";
  out << "\n";
  return 0;
}

// ---------------------------------------------------------------- sweep

struct SweepFlags {
  std::string scene;
  std::string network;
  std::string spec;
  std::string output;
  CommonRunFlags common;
};

const std::vector<std::string>& sweep_metrics() {
  static const std::vector<std::string> m{
      "total_cycles",    "fine_total",     "coarse_total",      "search_cycles",
      "compute_cycles",  "weight_accesses", "weight_misses",    "weight_dram_bytes",
      "dram_read_bytes", "dram_write_bytes", "energy_pj"};
  return m;
}

std::string csv_cell(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::vector<std::string> metric_row(const SimReport& rep, const EnergyTable& table) {
  std::uint64_t search = 0, compute = 0;
  PartitionStats w;
  for (const LayerSimReport& l : rep.layers) {
    search += l.search_parallel.total;
    compute += rep.sparse_compute ? l.compute_sparse : l.compute_dense;
    for (const PartitionStats& p : l.weight_cache) w.merge(p);
    w.merge(l.weight_stream);
  }
  std::ostringstream energy;
  energy.precision(17);
  energy << energy_report(rep.ledger, table).total_pj;
  return {std::to_string(rep.totals.total),     std::to_string(rep.totals.fine_total),
          std::to_string(rep.totals.coarse_total), std::to_string(search),
          std::to_string(compute),              std::to_string(w.accesses),
          std::to_string(w.misses),             std::to_string(w.bytes_fetched),
          std::to_string(rep.ledger.dram_read_bytes), std::to_string(rep.ledger.dram_write_bytes),
          energy.str()};
}

unsigned sweep_workers(std::size_t points) {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SPOCTA_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v < 1) throw Error(ErrorCode::ConfigInvalid, "SPOCTA_THREADS must be a positive integer");
    cap = static_cast<unsigned>(std::min<long>(v, 1024));
  }
  return static_cast<unsigned>(std::min<std::size_t>(cap, std::max<std::size_t>(points, 1)));
}

int cmd_sweep(const SweepFlags& f, std::ostream& out) {
  const RunOptions base = options_from(f.common);
  const std::vector<Json> points = expand_sweep(load_json_file(f.spec));

  std::vector<std::string> knobs;
  for (const Json& p : points) {
    for (const auto& [k, v] : p.items()) {
      if (std::find(knobs.begin(), knobs.end(), k) == knobs.end()) knobs.push_back(k);
    }
  }
  std::vector<RunOptions> configs(points.size(), base);
  for (std::size_t i = 0; i < points.size(); ++i) {
    try {
      apply_config(configs[i], points[i]);
    } catch (const Error& e) {
      throw Error(e.code(), "sweep point " + std::to_string(i) + ": " + e.what());
    }
  }

  std::vector<std::vector<std::string>> rows(points.size());
  if (!points.empty()) {
    // The functional pass does not depend on the swept knobs.
    const Scene scene = load_scene(f.scene);
    const AnyNetwork net = load_network(f.network);
    const SceneRun run = run_scene(scene, net, base);
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(points.size());
    auto work = [&] {
      for (std::size_t i; (i = next.fetch_add(1)) < points.size();) {
        try {
          rows[i] = metric_row(model_run(run.traces, configs[i]), configs[i].energy);
        } catch (...) {
          failures[i] = std::current_exception();
        }
      }
    };
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 1; t < sweep_workers(points.size()); ++t) pool.emplace_back(work);
      work();
    }
    for (const auto& e : failures) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::ostringstream csv;
  csv << "point";
  for (const auto& k : knobs) csv << "," << k;
  for (const auto& m : sweep_metrics()) csv << "," << m;
  csv << "\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    csv << i;
    for (const auto& k : knobs) csv << "," << (points[i].contains(k) ? csv_cell(points[i][k]) : "");
    for (const auto& v : rows[i]) csv << "," << v;
    csv << "\n";
  }
  if (f.output.empty()) {
    out << csv.str();
  } else {
    write_text(f.output, csv.str());
    out << points.size() << " sweep points written to " << f.output << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- verify

struct VerifyFlags {
  std::string scene;
  std::string network;
  unsigned threads = 1;
};

int cmd_verify(const VerifyFlags& f, std::ostream& out) {
  const Scene scene = load_scene(f.scene);
  const auto coords = scene.coords();
  if (f.network.empty()) {
    auto check = [&](OpKind op, const InOutMap& map, std::span<const Coordinate> in,
                     std::span<const Coordinate> targets) {
      validate_map(map, in.size());
      if (canonical_triples(map, in) != canonical_triples(search_bruteforce(in, op, targets), in)) {
        throw Error(ErrorCode::OracleMismatch, std::string(to_string(op)) + " map differs from brute force");
      }
      out << to_string(op) << ": ok (" << map.entries.size() << " entries)\n";
    };
    check(OpKind::Subm3, search_subm3(coords).map, coords, {});
    const SearchResult down = search_gconv2(coords);
    check(OpKind::Gconv2, down.map, coords, {});
    check(OpKind::Gconv3, search_gconv3(coords).map, coords, {});
    check(OpKind::Tconv2, transpose_map(down.map, coords), down.map.out_coords, coords);
    return 0;
  }
  RunOptions o;
  o.oracle = true;
  o.hash_baseline = false;
  o.threads = f.threads;
  const SceneRun run = run_scene(scene, load_network(f.network), o);
  for (const LayerTrace& lt : run.traces) {
    out << "layer " << lt.layer_id << " " << to_string(lt.op) << ": ok (" << lt.entry_taps.size()
        << " entries)\n";
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse 3D convolution accelerator model"};
  app.name("spocta");
  app.require_subcommand(1);
  app.fallthrough();
  std::string error_json_path;
  app.add_option("--error-json", error_json_path, "On failure write a JSON error object here ('-' for stderr)");

  GenFlags gen;
  CLI::App* c_gen = app.add_subcommand("gen", "Generate a synthetic voxel scene");
  c_gen->add_option("--extent", gen.extent, "Grid edge length")->capture_default_str();
  c_gen->add_option("--density", gen.density, "Occupied fraction of the grid, in (0, 1]")->capture_default_str();
  c_gen->add_option("--distribution", gen.distribution, "uniform or surface")->capture_default_str();
  c_gen->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  c_gen->add_option("--channels", gen.channels, "Feature channels")->capture_default_str();
  c_gen->add_option("--dtype", gen.dtype, "int8 or float32")->capture_default_str();
  c_gen->add_option("--feature-density", gen.feature_density, "Non-zero feature fraction")->capture_default_str();
  c_gen->add_option("-o,--output", gen.output, "Scene file to write")->required();

  GenNetFlags gn;
  CLI::App* c_gn = app.add_subcommand("gen-net", "Write a preset network with seeded weights");
  c_gn->add_option("--preset", gn.preset, "identity, unet or down3")->capture_default_str();
  c_gn->add_option("--channels", gn.channels, "Input channels")->capture_default_str();
  c_gn->add_option("--dtype", gn.dtype, "int8 or float32")->capture_default_str();
  c_gn->add_option("--seed", gn.seed, "Random seed")->capture_default_str();
  c_gn->add_option("-o,--output", gn.output, "Network JSON to write (weights go next to it)")->required();

  SearchFlags sf;
  CLI::App* c_search = app.add_subcommand("search", "Build one layer's map and report search statistics");
  c_search->add_option("scene", sf.scene, "Scene file")->required()->check(CLI::ExistingFile);
  c_search->add_option("--op", sf.op, "subm3, gconv2, gconv3 or tconv2")->required();
  c_search->add_option("--map", sf.map, "Map file to write");
  c_search->add_option("--report", sf.report, "Statistics JSON to write (stdout otherwise)");
  c_search->add_option("--config", sf.config, "Flat JSON object of model knobs")->check(CLI::ExistingFile);
  c_search->add_flag("--no-hash", sf.no_hash, "Skip the hash-table baseline");

  RunFlags rf;
  CLI::App* c_run = app.add_subcommand("run", "Run a network over a scene and model its timing");
  c_run->add_option("scene", rf.scene, "Scene file")->required()->check(CLI::ExistingFile);
  c_run->add_option("network", rf.network, "Network JSON")->required()->check(CLI::ExistingFile);
  c_run->add_option("-o,--output", rf.output, "Output scene file");
  c_run->add_option("--report", rf.report, "Simulation report JSON");
  c_run->add_option("--energy-report", rf.energy_report, "Energy report JSON");
  add_run_flags(c_run, rf.common);

  SweepFlags sw;
  CLI::App* c_sweep = app.add_subcommand("sweep", "Model a network over a set of configurations");
  c_sweep->add_option("scene", sw.scene, "Scene file")->required()->check(CLI::ExistingFile);
  c_sweep->add_option("network", sw.network, "Network JSON")->required()->check(CLI::ExistingFile);
  c_sweep->add_option("--spec", sw.spec, "Sweep spec JSON")->required()->check(CLI::ExistingFile);
  c_sweep->add_option("-o,--output", sw.output, "CSV to write (stdout otherwise)");
  add_run_flags(c_sweep, sw.common);

  VerifyFlags vf;
  CLI::App* c_verify = app.add_subcommand("verify", "Check maps and outputs against the oracles");
  c_verify->add_option("scene", vf.scene, "Scene file")->required()->check(CLI::ExistingFile);
  c_verify->add_option("network", vf.network, "Network JSON (maps only when omitted)")
      ->check(CLI::ExistingFile);
  c_verify->add_option("--threads", vf.threads, "Worker threads")->check(CLI::Range(1u, 256u));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  auto report_error = [&](const Json& j, const std::string& message) {
    err << "error: " << message << "\n";
    if (error_json_path == "-") {
      err << dump(j);
    } else if (!error_json_path.empty()) {
      std::ofstream os(error_json_path, std::ios::binary);
      os << dump(j);
    }
    return 1;
  };
  try {
    if (c_gen->parsed()) return cmd_gen(gen, out);
    if (c_gn->parsed()) return cmd_gen_net(gn, out);
    if (c_search->parsed()) return cmd_search(sf, out);
    if (c_run->parsed()) return cmd_run(rf, out);
    if (c_sweep->parsed()) return cmd_sweep(sw, out);
    if (c_verify->parsed()) return cmd_verify(vf, out);
  } catch (const Error& e) {
    return report_error(error_json(e.code(), e.what()), e.what());
  } catch (const std::exception& e) {
    return report_error(Json{{"error", Json{{"code", "Internal"}, {"message", e.what()}}}}, e.what());
  }
  return 2;
}

}  // namespace spocta

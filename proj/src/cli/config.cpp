#include "spocta/cli/config.hpp"

#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "spocta/error.hpp"

namespace spocta {

namespace {

Error bad(const std::string& key, const std::string& why) {
  return Error(ErrorCode::ConfigInvalid, "config key '" + key + "': " + why);
}

std::uint64_t as_uint(const std::string& key, const Json& v) {
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw bad(key, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

unsigned as_unsigned(const std::string& key, const Json& v) {
  const std::uint64_t u = as_uint(key, v);
  if (u > std::numeric_limits<unsigned>::max()) throw bad(key, "value too large");
  return static_cast<unsigned>(u);
}

double as_double(const std::string& key, const Json& v) {
  if (!v.is_number()) throw bad(key, "expected a number");
  return v.get<double>();
}

bool as_bool(const std::string& key, const Json& v) {
  if (!v.is_boolean()) throw bad(key, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const std::string& key, const Json& v) {
  if (!v.is_string()) throw bad(key, "expected a string");
  return v.get<std::string>();
}

}  // namespace

void apply_config(RunOptions& o, const Json& flat) {
  if (!flat.is_object()) throw Error(ErrorCode::ConfigInvalid, "config must be a JSON object");
  PipelineConfig& p = o.pipeline;
  for (const auto& [key, v] : flat.items()) {
    if (key == "fifo_count") p.fifo_count = as_unsigned(key, v);
    else if (key == "fifo_depth") p.fifo_depth = as_unsigned(key, v);
    else if (key == "query_banks") p.query_banks = as_unsigned(key, v);
    else if (key == "pe_in_lanes") p.pe_in_lanes = as_unsigned(key, v);
    else if (key == "pe_out_lanes") p.pe_out_lanes = as_unsigned(key, v);
    else if (key == "filter_writes_per_cycle") p.filter_writes_per_cycle = as_unsigned(key, v);
    else if (key == "cross_block_penalty") p.cross_block_penalty = as_unsigned(key, v);
    else if (key == "hash_cycles_per_query") p.hash_cycles_per_query = as_unsigned(key, v);
    else if (key == "overlap_table_build") p.overlap_table_build = as_bool(key, v);
    else if (key == "clock_hz") p.clock_hz = as_double(key, v);
    else if (key == "dram_bytes_per_second") p.dram_bytes_per_second = as_double(key, v);
    else if (key == "pipeline") {
      const std::string s = as_string(key, v);
      if (s == "fine") p.mode = PipelineMode::FineGrained;
      else if (s == "coarse") p.mode = PipelineMode::CoarseGrained;
      else throw bad(key, "expected \"fine\" or \"coarse\"");
    } else if (key == "sparse_compute") o.sparse_compute = as_bool(key, v);
    else if (key == "hash_baseline") o.hash_baseline = as_bool(key, v);
    else if (key == "granularity") {
      const std::string s = as_string(key, v);
      if (s == "bit") o.granularity = Granularity::Bit;
      else if (s == "group") o.granularity = Granularity::Group;
      else throw bad(key, "expected \"bit\" or \"group\"");
    } else if (key == "allocation") {
      const std::string s = as_string(key, v);
      if (s == "non-uniform") o.cache.allocation = Allocation::NonUniform;
      else if (s == "uniform") o.cache.allocation = Allocation::Uniform;
      else throw bad(key, "expected \"non-uniform\" or \"uniform\"");
    } else if (key == "cache_total_bytes") o.cache_total_bytes = as_uint(key, v);
    else if (key == "center_bytes") {
      o.cache[Partition::Center].capacity_bytes = as_uint(key, v);
      o.cache.center_auto = o.cache[Partition::Center].capacity_bytes == 0;
    } else if (key == "mid_bytes") o.cache[Partition::Mid].capacity_bytes = as_uint(key, v);
    else if (key == "up_bytes") o.cache[Partition::Up].capacity_bytes = as_uint(key, v);
    else if (key == "down_bytes") o.cache[Partition::Down].capacity_bytes = as_uint(key, v);
    else if (key == "uniform_bytes") o.cache.uniform_capacity_bytes = as_uint(key, v);
    else throw bad(key, "unknown key");
  }
  p.validate();
}

Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
  }
}

std::vector<Json> expand_sweep(const Json& spec) {
  if (!spec.is_object()) throw Error(ErrorCode::ConfigInvalid, "sweep spec must be a JSON object");
  std::vector<Json> points;
  for (const auto& [key, v] : spec.items()) {
    if (key != "points" && key != "grid") {
      throw Error(ErrorCode::ConfigInvalid, "sweep spec: unknown key '" + key + "'");
    }
  }
  if (spec.contains("points")) {
    const Json& list = spec["points"];
    if (!list.is_array()) throw Error(ErrorCode::ConfigInvalid, "sweep spec: points must be a list");
    for (const Json& p : list) {
      if (!p.is_object()) throw Error(ErrorCode::ConfigInvalid, "sweep spec: each point must be an object");
      points.push_back(p);
    }
  }
  if (spec.contains("grid")) {
    const Json& grid = spec["grid"];
    if (!grid.is_object()) throw Error(ErrorCode::ConfigInvalid, "sweep spec: grid must be an object");
    std::vector<Json> partial{Json::object()};
    for (const auto& [key, values] : grid.items()) {
      if (!values.is_array() || values.empty()) {
        throw Error(ErrorCode::ConfigInvalid, "sweep spec: grid '" + key + "' must be a non-empty list");
      }
      std::vector<Json> next;
      for (const Json& base : partial) {
        for (const Json& v : values) {
          Json p = base;
          p[key] = v;
          next.push_back(std::move(p));
        }
      }
      partial = std::move(next);
    }
    if (!grid.empty()) points.insert(points.end(), partial.begin(), partial.end());
  }
  return points;
}

}  // namespace spocta

#pragma once

#include <string>

#include <json.hpp>

#include "spocta/cli/runner.hpp"
#include "spocta/error.hpp"
#include "spocta/memory.hpp"
#include "spocta/sim.hpp"

namespace spocta {

using Json = nlohmann::ordered_json;

Json to_json(const SearchCycles& c);
Json to_json(const PipelineTiming& t);
Json to_json(const TrafficLedger& l);
Json to_json(const EnergyBreakdown& e);
Json to_json(const SimReport& r);
Json error_json(ErrorCode code, const std::string& message);

/// Search-only statistics for one traced search.
Json search_stats_json(const SearchTrace& trace, const InOutMap& map,
                       const std::optional<SearchTrace>& hash_trace, const PipelineConfig& cfg);

/// Pretty-printed with a trailing newline.
std::string dump(const Json& j);

}  // namespace spocta

#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "skippipe/allocation.hpp"
#include "skippipe/scheduler.hpp"
#include "skippipe/simulator.hpp"
#include "skippipe/topology.hpp"

namespace skippipe {

using json = nlohmann::json;

void to_json(json& j, const Topology& t);
void from_json(const json& j, Topology& t);

void to_json(json& j, const Range& r);
void from_json(const json& j, Range& r);
void to_json(json& j, const TopologyProfile& p);
void from_json(const json& j, TopologyProfile& p);

void to_json(json& j, const ModelPreset& p);
void from_json(const json& j, ModelPreset& p);

void to_json(json& j, const GAConfig& c);
void from_json(const json& j, GAConfig& c);

void to_json(json& j, const StageAssignment& a);
void from_json(const json& j, StageAssignment& a);

void to_json(json& j, const SchedulerConfig& c);
void from_json(const json& j, SchedulerConfig& c);

void to_json(json& j, const IntervalConstraint& c);
void from_json(const json& j, IntervalConstraint& c);

void to_json(json& j, const Visit& v);
void from_json(const json& j, Visit& v);

void to_json(json& j, const PathPlan& p);
void from_json(const json& j, PathPlan& p);

void to_json(json& j, const Schedule& s);
void from_json(const json& j, Schedule& s);

void to_json(json& j, const SimReport& r);

/// Trace rows: time_ms,node,event,agent,wave,direction
std::string trace_csv(const std::vector<TraceEvent>& trace);
std::vector<TraceEvent> trace_from_json(const json& report);

json read_json(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline; byte-stable for equal values.
void write_json(const std::filesystem::path& path, const json& value);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Shortest round-trip decimal form, used for every number written to CSV.
std::string format_number(double value);

}  // namespace skippipe

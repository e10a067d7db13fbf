#pragma once

#include <string>
#include <vector>

#include "skippipe/simulator.hpp"

namespace skippipe {

/// Standalone SVG timeline: one band per node, one rectangle per compute
/// interval in the trace, colored by agent and shaded by direction.
std::string emit_gantt(const std::vector<TraceEvent>& trace, int n_nodes);

/// Throws ValidationError when the report was recorded without a trace.
std::string emit_gantt(const SimReport& report);

}  // namespace skippipe

#pragma once

#include <vector>

#include "skippipe/allocation.hpp"
#include "skippipe/scheduler.hpp"
#include "skippipe/topology.hpp"

namespace skippipe {

/// Minimum-cost perfect assignment of rows to columns (cost[row][col]).
/// Returns col_of_row; among optimal assignments the lexicographically
/// smallest is returned. Exact (subset DP), intended for <= 20 rows.
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost);

/// Full sequential pipelines over equal-size stages: equal clustering and
/// closed-loop ordering as for SkipPipe, then the i-th pipeline is chained
/// through adjacent stages by min-cost matching on activation comm_time.
/// Every node hosts the mem_capacity agents of its pipeline.
Schedule dtfm_full(const Topology& topology, int s, const AllocationOptions& options, double msg_bytes);

/// Unit-cost copy: every compute (forward and backward) and every link costs 1.
Topology unit_cost_clone(const Topology& topology);

/// Skip baseline: paths planned on the unit-cost clone with stage and node
/// caps enforced and collisions ignored, then re-timed on the true topology.
Schedule dtfm_skip(const Topology& topology, const StageAssignment& assignment, SchedulerConfig config);

/// SkipPipe with collision resolution switched off.
Schedule skippipe_no_tc2(const Topology& topology, const StageAssignment& assignment, SchedulerConfig config);

/// Full SkipPipe schedule.
Schedule skippipe_full(const Topology& topology, const StageAssignment& assignment, SchedulerConfig config);

/// Credits a baseline for nodes it left idle: time * nodes_used / nodes_total.
double compensate(double time_ms, int nodes_used, int nodes_total);

}  // namespace skippipe

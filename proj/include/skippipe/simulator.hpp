#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "skippipe/scheduler.hpp"
#include "skippipe/topology.hpp"

namespace skippipe {

/// Forward node sequence of one agent, origin first. The backward pass
/// walks it in reverse and the loss is taken back at the origin.
struct Route {
    int agent = 0;
    std::vector<int> nodes;
};

std::vector<Route> routes_of(const Schedule& schedule);

struct SimConfig {
    int total_microbatches = 0;  // M; the last wave may be partial
    double msg_bytes = 0.0;      // activations and gradients alike
    bool record_trace = false;
};

enum class TraceKind { Launch, Arrive, Start, End, Complete };

std::string to_string(TraceKind kind);

struct TraceEvent {
    double time = 0.0;
    int node = 0;
    TraceKind kind = TraceKind::Arrive;
    int agent = 0;
    int wave = 0;
    bool backward = false;

    bool operator==(const TraceEvent&) const = default;
};

struct MicrobatchResult {
    int agent = 0;
    int wave = 0;
    double launch = 0.0;
    double completion = 0.0;
    double e2e() const { return completion - launch; }
};

struct SimReport {
    double makespan = 0.0;
    std::vector<MicrobatchResult> microbatches;  // sorted by (wave, agent)
    double total_wait_ms = 0.0;                  // sum of queueing delay before each compute
    std::vector<double> node_busy_ms;
    std::vector<double> node_idle_ms;
    int max_active = 0;            // peak microbatches holding activations on one node
    int memory_overcommits = 0;    // forwards forced past the memory cap to break a deadlock
    bool has_trace = false;
    std::vector<TraceEvent> trace;
};

/// Discrete-event execution of M microbatches over the given routes.
///
/// Nodes compute one microbatch at a time; queued backward work goes before
/// queued forward work (1F1B), then FIFO by arrival, wave and agent. A node
/// with mem_capacity microbatches holding activations does not start new
/// forward work. Links are full duplex and never contend. When a
/// microbatch's backward finishes at its origin, the next wave's microbatch
/// of the same agent launches on the same route.
SimReport simulate(std::span<const Route> routes, const Topology& topology, const SimConfig& config);
SimReport simulate(const Schedule& schedule, const Topology& topology, const SimConfig& config);

struct ComparisonRow {
    std::string name;
    SimReport report;
    double speedup_vs_first = 1.0;  // makespan(first) / makespan(this)
};

struct Comparison {
    std::vector<ComparisonRow> rows;                     // sorted by name
    std::vector<std::vector<double>> pairwise_speedup;   // [a][b] = makespan(a) / makespan(b)
};

Comparison compare(const std::map<std::string, Schedule>& schedules, const Topology& topology,
                   const SimConfig& config);

}  // namespace skippipe

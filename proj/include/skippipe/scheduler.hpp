#pragma once

#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "skippipe/allocation.hpp"
#include "skippipe/topology.hpp"

namespace skippipe {

/// A microbatch slot of the first wave, launched from a node in S0.
struct Agent {
    int id = 0;
    int origin = 0;
};

/// `agent` may not occupy `node` during [t_start, t_end]. Infinite bounds
/// ban the node outright.
struct IntervalConstraint {
    int agent = 0;
    int node = 0;
    double t_start = -std::numeric_limits<double>::infinity();
    double t_end = std::numeric_limits<double>::infinity();

    bool permanent() const { return t_start == -std::numeric_limits<double>::infinity() &&
                                    t_end == std::numeric_limits<double>::infinity(); }
    auto operator<=>(const IntervalConstraint&) const = default;
};

IntervalConstraint ban(int agent, int node);

/// One stop on a route. `stage` is the pipeline position (0 = S0).
struct Visit {
    int node = 0;
    int stage = 0;
    double arrival = 0.0;
    double start = 0.0;
    double end = 0.0;

    bool operator==(const Visit&) const = default;
};

/// Timed route of one agent.
///
/// `visits` is the forward pass: origin, the l-1 other stages, then the
/// return to the origin (arrival only, start == end). `backward` mirrors
/// the route: the l-1 non-origin nodes in reverse, then the origin.
/// e2e is the completion time of the origin's backward compute.
struct PathPlan {
    int agent = 0;
    std::vector<Visit> visits;
    std::vector<Visit> backward;
    int swap_count = 0;
    double e2e = 0.0;

    int origin() const { return visits.front().node; }
    /// Forward nodes without the closing return to the origin.
    std::vector<int> route() const;
    std::vector<int> stage_sequence() const;
};

/// Pipeline view of a StageAssignment: node lists per pipeline position
/// and the reverse lookup.
struct StageLayout {
    std::vector<std::vector<int>> stages;
    std::vector<int> stage_of;  // -1 for nodes outside every stage
    int visited = 0;            // l, S0 included

    StageLayout() = default;
    StageLayout(const StageAssignment& assignment, int n_nodes, double k);
    int s() const { return static_cast<int>(stages.size()); }
};

struct SchedulerConfig {
    double k = 0.0;                     // skip percent
    double msg_bytes = 0.0;             // activation message per hop
    int pool_size = 32;                 // candidates collected before throughput resolution
    double slow_exempt_fraction = 0.25; // slowest agents spared from stage constraints
    double delta_tie = 1.0;             // ms; closer e2e than this branches both ways on a collision
    int max_swaps = 1;
    bool resolve_collisions = true;     // false: stop once stage and node caps hold
    int max_candidate_expansions = 4000;
    int max_resolution_expansions = 4000;
};

void validate(const SchedulerConfig& config);

/// Fastest route for one agent under its interval constraints.
///
/// Uniform-cost search over (node, visited stages, swaps, time) without a
/// closed set. Entering a node whose compute would overlap a forbidden
/// interval waits until the interval ends. Once l stages are visited the
/// return to the origin is queued with the full forward + backward time as
/// its key; the first such entry popped is optimal. Throws InfeasibleError
/// if no route satisfies the constraints.
PathPlan astar_path(const Agent& agent, const Topology& topology, const StageLayout& layout,
                    std::span<const IntervalConstraint> constraints, const SchedulerConfig& config);

/// Re-times a fixed route (origin first, no closing return) with the same
/// rules as astar_path.
PathPlan time_route(int agent, std::span<const int> route, const Topology& topology,
                    const StageLayout& layout, std::span<const IntervalConstraint> constraints,
                    double msg_bytes);

struct StageOveruse {
    int stage = 0;
    int count = 0;
    int cap = 0;
};

struct NodeOveruse {
    int node = 0;
    int count = 0;
    int cap = 0;
};

/// Overlaps shorter than this (ms) are rounding noise between touching intervals.
inline constexpr double kOverlapToleranceMs = 1e-6;

struct Collision {
    int agent_a = 0;  // a < b
    int agent_b = 0;
    int node = 0;
    double overlap_start = 0.0;
    double overlap_end = 0.0;
    // Colliding forward compute intervals of each agent.
    double a_start = 0.0, a_end = 0.0;
    double b_start = 0.0, b_end = 0.0;
};

using Conflict = std::variant<StageOveruse, NodeOveruse, Collision>;

struct SearchNode {
    std::vector<IntervalConstraint> constraints;  // kept sorted
    std::vector<PathPlan> paths;                  // indexed by agent id
    double cost = 0.0;                            // max e2e
};

/// Visit cap for every non-first stage: ceil(|agents| * (l-1) / (s-1)).
int stage_visit_cap(int agents, const StageLayout& layout);

/// Conflicts in resolution order: stage overuse, node overuse, then
/// collisions (those touching the critical path first, then by overlap start).
std::vector<Conflict> detect_conflicts(const SearchNode& node, const StageLayout& layout, int mem_capacity);

/// m agents per S0 node; agent r*|S0| + i starts at the i-th node of S0.
std::vector<Agent> make_agents(const StageLayout& layout, int mem_capacity);

struct CandidateSearch {
    std::vector<SearchNode> pool;
    int expansions = 0;
};

/// Phase one: best-first CBS until `pool_size` nodes satisfy the stage caps.
CandidateSearch find_candidates(const Topology& topology, const StageLayout& layout,
                                std::span<const Agent> agents, const SchedulerConfig& config);

struct Resolution {
    SearchNode node;
    bool resolved = false;
    int expansions = 0;
};

/// Phase two: best-first over the candidate pool until a node has no
/// stage, node or (unless disabled) collision conflicts. Falls back to the
/// least-conflicted node seen, flagged unresolved.
Resolution resolve_throughput(std::span<const SearchNode> candidates, const Topology& topology,
                              const StageLayout& layout, std::span<const Agent> agents,
                              const SchedulerConfig& config);

enum class BaselineKind { DtfmFull, DtfmSkip, SkipPipeNoTc2, SkipPipe };

std::string to_string(BaselineKind kind);
BaselineKind baseline_from_string(const std::string& name);

struct Schedule {
    BaselineKind kind = BaselineKind::SkipPipe;
    SchedulerConfig config;
    StageAssignment assignment;
    std::vector<Agent> agents;
    SearchNode solution;
    bool resolved = true;
    int candidates = 0;
    int expansions = 0;
};

/// find_candidates followed by resolve_throughput.
Schedule schedule(const Topology& topology, const StageAssignment& assignment, const SchedulerConfig& config);

}  // namespace skippipe

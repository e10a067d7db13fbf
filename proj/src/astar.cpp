#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <tuple>

#include "skippipe/error.hpp"
#include "skippipe/scheduler.hpp"

namespace skippipe {

IntervalConstraint ban(int agent, int node) {
    return IntervalConstraint{agent, node, -std::numeric_limits<double>::infinity(),
                              std::numeric_limits<double>::infinity()};
}

std::vector<int> PathPlan::route() const {
    std::vector<int> nodes;
    for (size_t i = 0; i + 1 < visits.size(); ++i) nodes.push_back(visits[i].node);
    return nodes;
}

std::vector<int> PathPlan::stage_sequence() const {
    std::vector<int> stages;
    for (size_t i = 0; i + 1 < visits.size(); ++i) stages.push_back(visits[i].stage);
    return stages;
}

StageLayout::StageLayout(const StageAssignment& assignment, int n_nodes, double k)
    : stages(assignment.pipeline()), stage_of(n_nodes, -1), visited(visited_stage_count(assignment.s, k)) {
    validate(assignment, n_nodes);
    for (auto& nodes : stages) std::sort(nodes.begin(), nodes.end());
    for (int p = 0; p < s(); ++p)
        for (int node : stages[p]) stage_of[node] = p;
    if (visited > s()) throw ValidationError("visited stage count exceeds stage count");
}

void validate(const SchedulerConfig& c) {
    if (!(c.k >= 0.0 && c.k < 100.0)) throw ValidationError("skip percent must be in [0, 100)");
    if (!(c.msg_bytes > 0.0)) throw ValidationError("scheduler msg_bytes must be positive");
    if (c.pool_size < 1) throw ValidationError("pool_size must be at least 1");
    if (!(c.slow_exempt_fraction >= 0.0 && c.slow_exempt_fraction < 1.0))
        throw ValidationError("slow_exempt_fraction must be in [0, 1)");
    if (!(c.delta_tie >= 0.0)) throw ValidationError("delta_tie must be non-negative");
    if (c.max_swaps != 1) throw ValidationError("only a single swap per path is supported");
    if (c.max_candidate_expansions < 1 || c.max_resolution_expansions < 1)
        throw ValidationError("expansion limits must be positive");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class ConstraintTable {
public:
    ConstraintTable(int n_nodes, std::span<const IntervalConstraint> constraints, int agent)
        : banned_(n_nodes, 0), windows_(n_nodes) {
        for (const auto& c : constraints) {
            if (c.agent != agent) continue;
            if (c.node < 0 || c.node >= n_nodes) throw ValidationError("constraint node out of range", c.agent, c.node);
            if (c.permanent())
                banned_[c.node] = 1;
            else
                windows_[c.node].emplace_back(c.t_start, c.t_end);
        }
        for (auto& w : windows_) std::sort(w.begin(), w.end());
    }

    bool banned(int node) const { return banned_[node] != 0; }

    /// Earliest t' >= t such that [t', t' + duration) avoids every window on node.
    double earliest_start(int node, double t, double duration) const {
        if (banned_[node]) return kInf;
        bool moved = true;
        while (moved && t < kInf) {
            moved = false;
            for (const auto& [ws, we] : windows_[node])
                if (std::min(t + duration, we) - std::max(t, ws) > kOverlapToleranceMs) {
                    t = we;
                    moved = true;
                }
        }
        return t;
    }

private:
    std::vector<char> banned_;
    std::vector<std::vector<std::pair<double, double>>> windows_;
};

// Adds the return visit and the mirrored backward pass to a forward prefix.
// Returns false if a constraint makes the backward pass impossible.
bool complete_plan(PathPlan& plan, const Topology& topology, const ConstraintTable& table, double msg_bytes) {
    const std::vector<Visit> fwd = plan.visits;
    const int origin = fwd.front().node;
    double t = fwd.back().end + comm_time(topology, fwd.back().node, origin, msg_bytes);
    plan.visits.push_back(Visit{origin, 0, t, t, t});

    plan.backward.clear();
    int prev = origin;
    for (size_t i = fwd.size(); i-- > 0;) {
        const Visit& v = fwd[i];
        const double arrival = t + comm_time(topology, prev, v.node, msg_bytes);
        const double dur = topology.compute_bwd_ms(v.node);
        const double start = table.earliest_start(v.node, arrival, dur);
        if (start == kInf) return false;
        t = start + dur;
        plan.backward.push_back(Visit{v.node, v.stage, arrival, start, t});
        prev = v.node;
    }
    plan.e2e = t;
    return true;
}

struct State {
    Visit visit;
    std::uint32_t mask = 0;  // visited pipeline positions
    int count = 0;           // stages visited, S0 included
    int top = 0;             // highest position visited
    int below_top = -1;      // position visited just before `top`
    int swaps = 0;
    int parent = -1;
};

void check_agent(const Agent& agent, const Topology& topology, const StageLayout& layout) {
    if (agent.origin < 0 || agent.origin >= topology.n)
        throw ValidationError("agent " + std::to_string(agent.id) + " origin out of range");
    if (layout.stage_of[agent.origin] != 0)
        throw ValidationError("agent " + std::to_string(agent.id) + " does not start in S0");
    if (layout.s() > 31) throw ValidationError("at most 31 stages are supported");
}

}  // namespace

PathPlan astar_path(const Agent& agent, const Topology& topology, const StageLayout& layout,
                    std::span<const IntervalConstraint> constraints, const SchedulerConfig& config) {
    check_agent(agent, topology, layout);
    const ConstraintTable table(topology.n, constraints, agent.id);
    const int s = layout.s();
    const int l = layout.visited;

    std::vector<State> states;
    std::vector<PathPlan> finished;
    // (key, 0 for finished entries so they win ties, insertion order, index)
    using Entry = std::tuple<double, int, std::uint64_t, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    std::uint64_t seq = 0;

    {
        const double dur = topology.compute_fwd_ms[agent.origin];
        const double start = table.earliest_start(agent.origin, 0.0, dur);
        if (start == kInf)
            throw InfeasibleError("agent " + std::to_string(agent.id) + " is banned from its origin");
        State root;
        root.visit = Visit{agent.origin, 0, 0.0, start, start + dur};
        root.mask = 1u;
        root.count = 1;
        states.push_back(root);
        open.emplace(root.visit.end, 1, seq++, 0);
    }

    auto reconstruct = [&](int idx) {
        PathPlan plan;
        plan.agent = agent.id;
        plan.swap_count = states[idx].swaps;
        for (int i = idx; i >= 0; i = states[i].parent) plan.visits.push_back(states[i].visit);
        std::reverse(plan.visits.begin(), plan.visits.end());
        return plan;
    };

    while (!open.empty()) {
        const auto [key, unfinished, order, idx] = open.top();
        open.pop();
        if (!unfinished) return finished[idx];

        const State cur = states[idx];
        if (cur.count == l) {
            PathPlan plan = reconstruct(idx);
            if (!complete_plan(plan, topology, table, config.msg_bytes)) continue;
            finished.push_back(std::move(plan));
            open.emplace(finished.back().e2e, 0, seq++, static_cast<int>(finished.size()) - 1);
            continue;
        }

        const int remaining_after = l - cur.count - 1;
        for (int p = 1; p < s; ++p) {
            if (cur.mask & (1u << p)) continue;
            State next = cur;
            if (p > cur.top) {
                next.below_top = cur.top;
                next.top = p;
            } else {
                // A descent is only allowed as the single adjacent transposition.
                if (cur.swaps >= config.max_swaps || p <= cur.below_top) continue;
                next.swaps = cur.swaps + 1;
            }
            next.mask = cur.mask | (1u << p);
            next.count = cur.count + 1;

            // Enough unvisited positions must remain to finish the route.
            int above = 0;
            bool middle = false;
            for (int q = 1; q < s; ++q) {
                if (next.mask & (1u << q)) continue;
                if (q > next.top) ++above;
                else if (next.swaps < config.max_swaps && q > next.below_top) middle = true;
            }
            if (above + (middle ? 1 : 0) < remaining_after) continue;

            for (int node : layout.stages[p]) {
                if (table.banned(node)) continue;
                const double arrival = cur.visit.end + comm_time(topology, cur.visit.node, node, config.msg_bytes);
                const double dur = topology.compute_fwd_ms[node];
                const double start = table.earliest_start(node, arrival, dur);
                if (start == kInf) continue;
                State child = next;
                child.visit = Visit{node, p, arrival, start, start + dur};
                child.parent = idx;
                states.push_back(child);
                open.emplace(child.visit.end, 1, seq++, static_cast<int>(states.size()) - 1);
            }
        }
    }
    throw InfeasibleError("no route for agent " + std::to_string(agent.id) + " under its constraints");
}

PathPlan time_route(int agent, std::span<const int> route, const Topology& topology, const StageLayout& layout,
                    std::span<const IntervalConstraint> constraints, double msg_bytes) {
    if (route.empty()) throw ValidationError("empty route");
    const ConstraintTable table(topology.n, constraints, agent);
    PathPlan plan;
    plan.agent = agent;
    double t = 0.0;
    int prev = -1;
    int top = -1;
    for (int node : route) {
        if (node < 0 || node >= topology.n) throw ValidationError("route node out of range", agent, node);
        const double arrival = prev < 0 ? 0.0 : t + comm_time(topology, prev, node, msg_bytes);
        const double dur = topology.compute_fwd_ms[node];
        const double start = table.earliest_start(node, arrival, dur);
        if (start == kInf) throw InfeasibleError("route visits a banned node");
        const int stage = layout.stage_of[node];
        if (stage < top) ++plan.swap_count;
        top = std::max(top, stage);
        t = start + dur;
        plan.visits.push_back(Visit{node, stage, arrival, start, t});
        prev = node;
    }
    if (route.size() == 1) {
        plan.visits.push_back(Visit{route[0], 0, t, t, t});
        const double dur = topology.compute_bwd_ms(route[0]);
        const double start = table.earliest_start(route[0], t, dur);
        plan.backward.push_back(Visit{route[0], 0, t, start, start + dur});
        plan.e2e = start + dur;
        return plan;
    }
    if (!complete_plan(plan, topology, table, msg_bytes)) throw InfeasibleError("route cannot complete its backward pass");
    return plan;
}

}  // namespace skippipe

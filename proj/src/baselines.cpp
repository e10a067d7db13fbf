#include "skippipe/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "skippipe/error.hpp"

namespace skippipe {

std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    if (n == 0) return {};
    if (n > 20) throw ValidationError("assignment supports at most 20 rows");
    for (const auto& row : cost)
        if (static_cast<int>(row.size()) != n) throw ValidationError("assignment cost matrix must be square");

    // togo[mask]: cheapest completion once the columns in `mask` are taken by
    // rows 0..popcount(mask)-1.
    const int full = (1 << n) - 1;
    std::vector<double> togo(full + 1, std::numeric_limits<double>::infinity());
    togo[full] = 0.0;
    for (int mask = full - 1; mask >= 0; --mask) {
        const int row = __builtin_popcount(static_cast<unsigned>(mask));
        for (int col = 0; col < n; ++col)
            if (!(mask & (1 << col))) togo[mask] = std::min(togo[mask], cost[row][col] + togo[mask | (1 << col)]);
    }
    std::vector<int> col_of_row;
    int mask = 0;
    for (int row = 0; row < n; ++row) {
        const double target = togo[mask];
        const double tol = 1e-9 * std::max(1.0, std::abs(target));
        for (int col = 0; col < n; ++col) {
            if (mask & (1 << col)) continue;
            if (cost[row][col] + togo[mask | (1 << col)] <= target + tol) {
                col_of_row.push_back(col);
                mask |= 1 << col;
                break;
            }
        }
    }
    return col_of_row;
}

Schedule dtfm_full(const Topology& topology, int s, const AllocationOptions& options, double msg_bytes) {
    validate(topology);
    if (s < 1 || topology.n % s != 0)
        throw ValidationError("full pipelines need the node count (" + std::to_string(topology.n) +
                              ") divisible by the stage count (" + std::to_string(s) + ")");
    const std::vector<int> sizes(s, topology.n / s);
    const auto clustering = cluster_nodes(topology, sizes, options.dp_msg_bytes, options.ga);
    const StageAssignment assignment = order_stages(topology, clustering.members, options.activation_bytes);

    SchedulerConfig config;
    config.k = 0.0;
    config.msg_bytes = msg_bytes;
    const StageLayout layout(assignment, topology.n, 0.0);

    // chains[i] is the i-th pipeline, grown one stage at a time.
    std::vector<std::vector<int>> chains;
    for (int node : layout.stages[0]) chains.push_back({node});
    for (int p = 1; p < layout.s(); ++p) {
        const auto& next = layout.stages[p];
        std::vector<std::vector<double>> cost(chains.size(), std::vector<double>(next.size()));
        for (size_t i = 0; i < chains.size(); ++i)
            for (size_t j = 0; j < next.size(); ++j) cost[i][j] = comm_time(topology, chains[i].back(), next[j], msg_bytes);
        const auto match = min_cost_assignment(cost);
        for (size_t i = 0; i < chains.size(); ++i) chains[i].push_back(next[match[i]]);
    }

    Schedule out;
    out.kind = BaselineKind::DtfmFull;
    out.config = config;
    out.assignment = assignment;
    out.agents = make_agents(layout, topology.mem_capacity);
    for (const auto& agent : out.agents) {
        const auto& chain = chains[static_cast<size_t>(agent.id) % chains.size()];
        out.solution.paths.push_back(time_route(agent.id, chain, topology, layout, {}, msg_bytes));
        out.solution.cost = std::max(out.solution.cost, out.solution.paths.back().e2e);
    }
    out.resolved = true;
    out.candidates = 1;
    return out;
}

Topology unit_cost_clone(const Topology& topology) {
    Topology unit = topology;
    for (int i = 0; i < topology.n; ++i)
        for (int j = 0; j < topology.n; ++j) {
            unit.latency_ms(i, j) = i == j ? 0.0 : 1.0;
            unit.bandwidth_bytes_per_ms(i, j) = i == j ? 0.0 : std::numeric_limits<double>::infinity();
        }
    std::fill(unit.compute_fwd_ms.begin(), unit.compute_fwd_ms.end(), 1.0);
    unit.bwd_ratio = 1.0;
    return unit;
}

Schedule dtfm_skip(const Topology& topology, const StageAssignment& assignment, SchedulerConfig config) {
    config.resolve_collisions = false;
    const Topology unit = unit_cost_clone(topology);
    Schedule out = schedule(unit, assignment, config);
    out.kind = BaselineKind::DtfmSkip;

    // Keep the unit-cost routes; report their times on the real network.
    const StageLayout layout(assignment, topology.n, config.k);
    std::vector<IntervalConstraint> bans;
    for (const auto& c : out.solution.constraints)
        if (c.permanent()) bans.push_back(c);
    out.solution.cost = 0.0;
    for (auto& path : out.solution.paths) {
        const auto route = path.route();
        path = time_route(path.agent, route, topology, layout, bans, config.msg_bytes);
        out.solution.cost = std::max(out.solution.cost, path.e2e);
    }
    return out;
}

Schedule skippipe_no_tc2(const Topology& topology, const StageAssignment& assignment, SchedulerConfig config) {
    config.resolve_collisions = false;
    return schedule(topology, assignment, config);
}

Schedule skippipe_full(const Topology& topology, const StageAssignment& assignment, SchedulerConfig config) {
    config.resolve_collisions = true;
    return schedule(topology, assignment, config);
}

double compensate(double time_ms, int nodes_used, int nodes_total) {
    if (nodes_used < 1 || nodes_total < 1) throw ValidationError("node counts must be positive");
    if (nodes_used > nodes_total) throw ValidationError("nodes_used exceeds nodes_total");
    return time_ms * nodes_used / nodes_total;
}

}  // namespace skippipe

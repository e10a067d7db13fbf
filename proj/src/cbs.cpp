#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <set>
#include <tuple>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/push_relabel_max_flow.hpp>

#include "skippipe/error.hpp"
#include "skippipe/scheduler.hpp"

namespace skippipe {

std::string to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::DtfmFull: return "DtfmFull";
        case BaselineKind::DtfmSkip: return "DtfmSkip";
        case BaselineKind::SkipPipeNoTc2: return "SkipPipeNoTc2";
        case BaselineKind::SkipPipe: return "SkipPipe";
    }
    return "?";
}

BaselineKind baseline_from_string(const std::string& name) {
    for (auto kind : {BaselineKind::DtfmFull, BaselineKind::DtfmSkip, BaselineKind::SkipPipeNoTc2,
                      BaselineKind::SkipPipe})
        if (to_string(kind) == name) return kind;
    throw ValidationError("unknown schedule variant '" + name + "'");
}

int stage_visit_cap(int agents, const StageLayout& layout) {
    if (layout.s() < 2) return agents;
    const int visits = agents * (layout.visited - 1);
    return (visits + layout.s() - 2) / (layout.s() - 1);
}

std::vector<Agent> make_agents(const StageLayout& layout, int mem_capacity) {
    std::vector<Agent> agents;
    const auto& first = layout.stages.at(0);
    for (int r = 0; r < mem_capacity; ++r)
        for (int node : first) agents.push_back(Agent{static_cast<int>(agents.size()), node});
    return agents;
}

namespace {

int critical_agent(const SearchNode& node) {
    int crit = -1;
    for (const auto& p : node.paths)
        if (crit < 0 || p.e2e > node.paths[crit].e2e) crit = p.agent;
    return crit;
}

}  // namespace

std::vector<Conflict> detect_conflicts(const SearchNode& node, const StageLayout& layout, int mem_capacity) {
    std::vector<Conflict> out;
    const int agents = static_cast<int>(node.paths.size());
    const int n_nodes = static_cast<int>(layout.stage_of.size());

    std::vector<int> stage_count(layout.s(), 0);
    std::vector<int> node_count(n_nodes, 0);
    struct Occupancy {
        int agent;
        double start;
        double end;
    };
    std::vector<std::vector<Occupancy>> occupancy(n_nodes);
    for (const auto& path : node.paths) {
        const auto route = path.route();
        for (size_t i = 0; i < route.size(); ++i) {
            const Visit& v = path.visits[i];
            if (v.stage > 0) ++stage_count[v.stage];
            ++node_count[v.node];
            occupancy[v.node].push_back({path.agent, v.start, v.end});
        }
    }

    const int cap = stage_visit_cap(agents, layout);
    for (int p = 1; p < layout.s(); ++p)
        if (stage_count[p] > cap) out.emplace_back(StageOveruse{p, stage_count[p], cap});
    for (int v = 0; v < n_nodes; ++v)
        if (node_count[v] > mem_capacity) out.emplace_back(NodeOveruse{v, node_count[v], mem_capacity});

    std::vector<Collision> collisions;
    for (int v = 0; v < n_nodes; ++v) {
        const auto& occ = occupancy[v];
        for (size_t i = 0; i < occ.size(); ++i)
            for (size_t j = i + 1; j < occ.size(); ++j) {
                if (occ[i].agent == occ[j].agent) continue;
                if (std::min(occ[i].end, occ[j].end) - std::max(occ[i].start, occ[j].start) > kOverlapToleranceMs) {
                    const auto& a = occ[i].agent < occ[j].agent ? occ[i] : occ[j];
                    const auto& b = occ[i].agent < occ[j].agent ? occ[j] : occ[i];
                    collisions.push_back(Collision{a.agent, b.agent, v, std::max(a.start, b.start),
                                                   std::min(a.end, b.end), a.start, a.end, b.start, b.end});
                }
            }
    }
    const int crit = critical_agent(node);
    std::sort(collisions.begin(), collisions.end(), [crit](const Collision& x, const Collision& y) {
        const bool cx = x.agent_a == crit || x.agent_b == crit;
        const bool cy = y.agent_a == crit || y.agent_b == crit;
        return std::tuple(!cx, x.overlap_start, x.node, x.agent_a, x.agent_b) <
               std::tuple(!cy, y.overlap_start, y.node, y.agent_a, y.agent_b);
    });
    for (const auto& c : collisions) out.emplace_back(c);
    return out;
}

namespace {

struct Conflicts {
    int hard = 0;        // stage + node overuse
    int collisions = 0;
};

Conflicts count(const std::vector<Conflict>& conflicts) {
    Conflicts c;
    for (const auto& x : conflicts)
        (std::holds_alternative<Collision>(x) ? c.collisions : c.hard)++;
    return c;
}

std::vector<Conflict> relevant_conflicts(const SearchNode& node, const StageLayout& layout, int m,
                                         bool collisions) {
    auto conflicts = detect_conflicts(node, layout, m);
    if (!collisions)
        std::erase_if(conflicts, [](const Conflict& c) { return std::holds_alternative<Collision>(c); });
    return conflicts;
}

using ConstraintKey = std::vector<IntervalConstraint>;

// Whether every agent can still pick l-1 distinct non-origin stages, one
// allowed node in each, with at most m paths per node and at most the
// visit cap per stage. Max flow over source -> agent -> (agent, stage) ->
// node -> stage -> sink.
bool caps_satisfiable(const std::vector<IntervalConstraint>& constraints, const StageLayout& layout, int agents,
                      int mem_capacity) {
    using Traits = boost::adjacency_list_traits<boost::vecS, boost::vecS, boost::directedS>;
    using Graph = boost::adjacency_list<
        boost::vecS, boost::vecS, boost::directedS, boost::no_property,
        boost::property<boost::edge_capacity_t, long,
                        boost::property<boost::edge_residual_capacity_t, long,
                                        boost::property<boost::edge_reverse_t, Traits::edge_descriptor>>>>;

    const int s = layout.s();
    const int n = static_cast<int>(layout.stage_of.size());
    const int need = layout.visited - 1;
    if (need == 0) return true;

    std::vector<char> banned(static_cast<size_t>(agents) * n, 0);
    for (const auto& c : constraints)
        if (c.permanent() && c.agent >= 0 && c.agent < agents) banned[static_cast<size_t>(c.agent) * n + c.node] = 1;

    // Vertex layout: source, sink, agents, agent-stage pairs, nodes, stages.
    const int source = 0, sink = 1;
    const int agent0 = 2;
    const int pair0 = agent0 + agents;
    const int node0 = pair0 + agents * s;
    const int stage0 = node0 + n;
    Graph g(stage0 + s);
    auto capacity = boost::get(boost::edge_capacity, g);
    auto reverse = boost::get(boost::edge_reverse, g);
    const auto link = [&](int u, int v, long cap) {
        const auto e = boost::add_edge(u, v, g).first;
        const auto r = boost::add_edge(v, u, g).first;
        capacity[e] = cap;
        capacity[r] = 0;
        reverse[e] = r;
        reverse[r] = e;
    };

    const int cap = stage_visit_cap(agents, layout);
    for (int a = 0; a < agents; ++a) {
        link(source, agent0 + a, need);
        for (int p = 1; p < s; ++p) {
            bool any = false;
            for (int v : layout.stages[p])
                if (!banned[static_cast<size_t>(a) * n + v]) {
                    if (!any) link(agent0 + a, pair0 + a * s + p, 1);
                    any = true;
                    link(pair0 + a * s + p, node0 + v, 1);
                }
        }
    }
    for (int p = 1; p < s; ++p) {
        for (int v : layout.stages[p]) link(node0 + v, stage0 + p, mem_capacity);
        link(stage0 + p, sink, cap);
    }
    const long flow = boost::push_relabel_max_flow(g, source, sink);
    return flow == static_cast<long>(agents) * need;
}

class Planner {
public:
    Planner(const Topology& t, const StageLayout& l, std::span<const Agent> a, const SchedulerConfig& c)
        : topology(t), layout(l), agents(a), config(c) {}

    SearchNode root() const {
        SearchNode node;
        for (const auto& agent : agents) node.paths.push_back(astar_path(agent, topology, layout, {}, config));
        node.cost = max_cost(node);
        return node;
    }

    /// Child of `parent` with `added` constraints; agents they touch are replanned.
    std::optional<SearchNode> child(const SearchNode& parent, const std::vector<IntervalConstraint>& added) const {
        SearchNode node;
        node.constraints = parent.constraints;
        node.constraints.insert(node.constraints.end(), added.begin(), added.end());
        std::sort(node.constraints.begin(), node.constraints.end());
        node.constraints.erase(std::unique(node.constraints.begin(), node.constraints.end()), node.constraints.end());
        if (node.constraints == parent.constraints) return std::nullopt;
        node.paths = parent.paths;
        std::set<int> touched;
        for (const auto& c : added) touched.insert(c.agent);
        for (int a : touched) {
            try {
                node.paths[a] = astar_path(agents[a], topology, layout, node.constraints, config);
            } catch (const InfeasibleError&) {
                return std::nullopt;
            }
        }
        node.cost = max_cost(node);
        return node;
    }

    /// Agents sorted fastest first (ties by id).
    std::vector<int> fastest_first(const SearchNode& node, const std::vector<int>& subset) const {
        std::vector<int> out = subset;
        std::sort(out.begin(), out.end(), [&](int a, int b) {
            return std::tuple(node.paths[a].e2e, a) < std::tuple(node.paths[b].e2e, b);
        });
        return out;
    }

    /// Constraint sets for the children of `node` on one conflict.
    std::vector<std::vector<IntervalConstraint>> branches(const SearchNode& node, const Conflict& conflict) const {
        std::vector<std::vector<IntervalConstraint>> out;
        if (const auto* so = std::get_if<StageOveruse>(&conflict)) {
            const auto& members = layout.stages[so->stage];
            auto added = pick_bans(node, stage_ban_order(node, *so), so->count - so->cap, [&](int a) {
                std::vector<IntervalConstraint> bans;
                for (int v : members) bans.push_back(ban(a, v));
                return bans;
            });
            if (!added.empty()) out.push_back(std::move(added));
        } else if (const auto* no = std::get_if<NodeOveruse>(&conflict)) {
            std::vector<int> through;
            for (const auto& p : node.paths)
                for (int v : p.route())
                    if (v == no->node) through.push_back(p.agent);
            // The slowest path keeps the node unless nothing else can make way.
            const auto order = fastest_first(node, through);
            auto added = pick_bans(node, order, no->count - no->cap, [&](int a) {
                return std::vector<IntervalConstraint>{ban(a, no->node)};
            });
            if (!added.empty()) out.push_back(std::move(added));
        } else {
            const auto& col = std::get<Collision>(conflict);
            const double ea = node.paths[col.agent_a].e2e;
            const double eb = node.paths[col.agent_b].e2e;
            const bool tie = std::abs(ea - eb) < config.delta_tie;
            // Constrain the faster path with the slower one's occupancy; both ways on a near tie.
            if (ea > eb || tie) out.push_back({IntervalConstraint{col.agent_b, col.node, col.a_start, col.a_end}});
            if (ea < eb || tie) out.push_back({IntervalConstraint{col.agent_a, col.node, col.b_start, col.b_end}});
        }
        return out;
    }

    const Topology& topology;
    const StageLayout& layout;
    std::span<const Agent> agents;
    const SchedulerConfig& config;

private:
    static double max_cost(const SearchNode& node) {
        double c = 0.0;
        for (const auto& p : node.paths) c = std::max(c, p.e2e);
        return c;
    }

    // Offenders through the stage in ban-preference order: non-exempt agents
    // fastest first, then the exempt slow agents as a last resort.
    std::vector<int> stage_ban_order(const SearchNode& node, const StageOveruse& so) const {
        const int total = static_cast<int>(node.paths.size());
        std::vector<int> all(total);
        for (int i = 0; i < total; ++i) all[i] = i;
        const auto by_speed = fastest_first(node, all);
        const int exempt_count = static_cast<int>(std::ceil(total * config.slow_exempt_fraction - 1e-9));
        std::vector<char> exempt(total, 0);
        for (int i = 0; i < exempt_count && i < total; ++i) exempt[by_speed[total - 1 - i]] = 1;

        std::vector<int> offenders;
        for (const auto& p : node.paths)
            for (int st : p.stage_sequence())
                if (st == so.stage) offenders.push_back(p.agent);
        offenders = fastest_first(node, offenders);
        std::stable_partition(offenders.begin(), offenders.end(), [&](int a) { return !exempt[a]; });
        return offenders;
    }

    // Takes agents from `order` until `need` are banned, skipping any whose
    // ban would leave the stage and node caps impossible to meet together.
    template <class BansFor>
    std::vector<IntervalConstraint> pick_bans(const SearchNode& node, const std::vector<int>& order, int need,
                                              BansFor bans_for) const {
        std::vector<IntervalConstraint> trial = node.constraints;
        std::vector<IntervalConstraint> added;
        int chosen = 0;
        for (int a : order) {
            if (chosen == need) break;
            const auto bans = bans_for(a);
            const size_t keep = trial.size();
            trial.insert(trial.end(), bans.begin(), bans.end());
            if (caps_satisfiable(trial, layout, static_cast<int>(agents.size()), topology.mem_capacity)) {
                added.insert(added.end(), bans.begin(), bans.end());
                ++chosen;
            } else {
                trial.resize(keep);
            }
        }
        return added;
    }
};

struct OpenEntry {
    double cost;
    int conflicts;
    std::uint64_t seq;
    int index;
    auto operator<=>(const OpenEntry&) const = default;
};

using OpenList = std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>>;

}  // namespace

CandidateSearch find_candidates(const Topology& topology, const StageLayout& layout, std::span<const Agent> agents,
                                const SchedulerConfig& config) {
    validate(config);
    if (agents.empty()) throw ValidationError("no agents to schedule");
    for (size_t i = 0; i < agents.size(); ++i)
        if (agents[i].id != static_cast<int>(i)) throw ValidationError("agent ids must be dense from 0");

    const Planner planner(topology, layout, agents, config);
    const int m = topology.mem_capacity;

    std::vector<SearchNode> nodes;
    std::vector<std::vector<Conflict>> conflicts;
    std::set<ConstraintKey> seen;
    OpenList open;
    std::uint64_t seq = 0;

    auto push = [&](SearchNode node) {
        if (!seen.insert(node.constraints).second) return false;
        auto c = relevant_conflicts(node, layout, m, false);
        std::erase_if(c, [](const Conflict& x) { return !std::holds_alternative<StageOveruse>(x); });
        open.push(OpenEntry{node.cost, static_cast<int>(c.size()), seq++, static_cast<int>(nodes.size())});
        nodes.push_back(std::move(node));
        conflicts.push_back(std::move(c));
        return true;
    };

    CandidateSearch out;
    try {
        push(planner.root());
    } catch (const InfeasibleError& e) {
        throw InfeasibleError(std::string("unconstrained planning failed: ") + e.what());
    }

    while (!open.empty() && static_cast<int>(out.pool.size()) < config.pool_size &&
           out.expansions < config.max_candidate_expansions) {
        const int idx = open.top().index;
        open.pop();
        ++out.expansions;
        if (conflicts[idx].empty()) {
            out.pool.push_back(std::move(nodes[idx]));
            continue;
        }
        // One child per overused stage keeps several alternatives alive for the pool.
        for (const auto& conflict : conflicts[idx])
            for (const auto& added : planner.branches(nodes[idx], conflict))
                if (auto child = planner.child(nodes[idx], added)) push(std::move(*child));
        nodes[idx] = SearchNode{};
    }
    if (out.pool.empty())
        throw InfeasibleError("no assignment of paths satisfies the per-stage visit cap");
    return out;
}

Resolution resolve_throughput(std::span<const SearchNode> candidates, const Topology& topology,
                              const StageLayout& layout, std::span<const Agent> agents,
                              const SchedulerConfig& config) {
    validate(config);
    if (candidates.empty()) throw ValidationError("no candidates to resolve");
    const Planner planner(topology, layout, agents, config);
    const int m = topology.mem_capacity;

    std::vector<SearchNode> nodes;
    std::vector<std::vector<Conflict>> conflicts;
    std::set<ConstraintKey> seen;
    OpenList open;
    std::uint64_t seq = 0;

    std::optional<std::tuple<int, int, double, std::uint64_t>> best_key;
    SearchNode best;

    auto push = [&](SearchNode node) {
        if (!seen.insert(node.constraints).second) return false;
        auto c = relevant_conflicts(node, layout, m, config.resolve_collisions);
        const Conflicts n = count(c);
        const auto key = std::tuple(n.hard, n.collisions, node.cost, seq);
        if (!best_key || key < *best_key) {
            best_key = key;
            best = node;
        }
        open.push(OpenEntry{node.cost, static_cast<int>(c.size()), seq++, static_cast<int>(nodes.size())});
        nodes.push_back(std::move(node));
        conflicts.push_back(std::move(c));
        return true;
    };

    for (const auto& c : candidates) push(c);

    Resolution out;
    while (!open.empty() && out.expansions < config.max_resolution_expansions) {
        const int idx = open.top().index;
        open.pop();
        ++out.expansions;
        if (conflicts[idx].empty()) {
            out.node = std::move(nodes[idx]);
            out.resolved = true;
            return out;
        }
        for (const auto& added : planner.branches(nodes[idx], conflicts[idx].front()))
            if (auto child = planner.child(nodes[idx], added)) push(std::move(*child));
        nodes[idx] = SearchNode{};
    }
    out.node = std::move(best);
    out.resolved = false;
    return out;
}

Schedule schedule(const Topology& topology, const StageAssignment& assignment, const SchedulerConfig& config) {
    validate(topology);
    validate(config);
    const StageLayout layout(assignment, topology.n, config.k);
    Schedule out;
    out.kind = config.resolve_collisions ? BaselineKind::SkipPipe : BaselineKind::SkipPipeNoTc2;
    out.config = config;
    out.assignment = assignment;
    out.agents = make_agents(layout, topology.mem_capacity);
    const auto candidates = find_candidates(topology, layout, out.agents, config);
    auto resolution = resolve_throughput(candidates.pool, topology, layout, out.agents, config);
    out.solution = std::move(resolution.node);
    out.resolved = resolution.resolved;
    out.candidates = static_cast<int>(candidates.pool.size());
    out.expansions = candidates.expansions + resolution.expansions;
    return out;
}

}  // namespace skippipe

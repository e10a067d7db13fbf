#pragma once

// Slow, obviously-correct reference implementations used only by tests.
// None of them call into the library's search code.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "skippipe/allocation.hpp"
#include "skippipe/scheduler.hpp"
#include "skippipe/topology.hpp"

namespace oracle {

using namespace skippipe;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double comm(const Topology& t, int i, int j, double bytes) {
    return t.latency_ms(i, j) + bytes / t.bandwidth_bytes_per_ms(i, j);
}

/// Stage-index sequence rule: at most one descent, and undoing it by an
/// adjacent swap gives a strictly increasing sequence.
inline bool one_adjacent_swap(const std::vector<int>& seq) {
    int descents = 0;
    size_t where = 0;
    for (size_t i = 0; i + 1 < seq.size(); ++i)
        if (seq[i] > seq[i + 1]) ++descents, where = i;
    if (descents == 0) return true;
    if (descents > 1) return false;
    std::vector<int> fixed = seq;
    std::swap(fixed[where], fixed[where + 1]);
    return std::is_sorted(fixed.begin(), fixed.end()) &&
           std::adjacent_find(fixed.begin(), fixed.end()) == fixed.end();
}

/// Per-node forbidden windows and bans for one agent.
struct Blocks {
    std::map<int, std::vector<std::pair<double, double>>> windows;
    std::vector<int> banned;

    Blocks(const std::vector<IntervalConstraint>& cs, int agent) {
        for (const auto& c : cs) {
            if (c.agent != agent) continue;
            if (c.t_start == -kInf && c.t_end == kInf)
                banned.push_back(c.node);
            else
                windows[c.node].emplace_back(c.t_start, c.t_end);
        }
    }
    bool is_banned(int node) const { return std::find(banned.begin(), banned.end(), node) != banned.end(); }

    double first_free(int node, double t, double d) const {
        auto it = windows.find(node);
        if (it == windows.end()) return t;
        for (;;) {
            bool clash = false;
            for (const auto& [a, b] : it->second) {
                const double overlap = std::min(t + d, b) - std::max(t, a);
                if (overlap > kOverlapToleranceMs) {
                    t = b;
                    clash = true;
                }
            }
            if (!clash) return t;
        }
    }
};

/// e2e of a fixed forward route (origin first) under the waiting rule.
inline double route_e2e(const Topology& t, const std::vector<int>& route, const Blocks& blocks, double bytes) {
    for (int v : route)
        if (blocks.is_banned(v)) return kInf;
    double clock = 0.0;
    for (size_t i = 0; i < route.size(); ++i) {
        const double arrive = i == 0 ? 0.0 : clock + comm(t, route[i - 1], route[i], bytes);
        const double f = t.compute_fwd_ms[route[i]];
        const double start = blocks.first_free(route[i], arrive, f);
        clock = start + f;
    }
    const int origin = route.front();
    clock = clock + comm(t, route.back(), origin, bytes);
    int prev = origin;
    for (size_t i = route.size(); i-- > 0;) {
        const double arrive = clock + comm(t, prev, route[i], bytes);
        const double d = t.compute_fwd_ms[route[i]] * t.bwd_ratio;
        const double start = blocks.first_free(route[i], arrive, d);
        clock = start + d;
        prev = route[i];
    }
    return clock;
}

/// Calls fn(route) for every admissible forward route from `origin` that
/// visits exactly l stages (origin included).
inline void for_each_route(const std::vector<std::vector<int>>& stages, int origin, int l,
                           const std::function<void(const std::vector<int>&)>& fn) {
    const int s = static_cast<int>(stages.size());
    std::vector<int> positions(s - 1);
    std::iota(positions.begin(), positions.end(), 1);
    // Every ordered choice of l-1 distinct positions.
    std::vector<int> seq{0};
    std::vector<char> used(s, 0);
    std::function<void()> pick = [&] {
        if (static_cast<int>(seq.size()) == l) {
            if (!one_adjacent_swap(seq)) return;
            std::vector<int> route{origin};
            std::function<void(size_t)> nodes = [&](size_t i) {
                if (i == seq.size()) {
                    fn(route);
                    return;
                }
                for (int v : stages[seq[i]]) {
                    route.push_back(v);
                    nodes(i + 1);
                    route.pop_back();
                }
            };
            nodes(1);
            return;
        }
        for (int p : positions) {
            if (used[p]) continue;
            used[p] = 1;
            seq.push_back(p);
            pick();
            seq.pop_back();
            used[p] = 0;
        }
    };
    pick();
}

/// Minimum e2e over every admissible route, or +inf when none exists.
inline double best_route_e2e(const Topology& t, const std::vector<std::vector<int>>& stages, int origin, int l,
                             const std::vector<IntervalConstraint>& constraints, int agent, double bytes) {
    const Blocks blocks(constraints, agent);
    double best = kInf;
    for_each_route(stages, origin, l, [&](const std::vector<int>& r) { best = std::min(best, route_e2e(t, r, blocks, bytes)); });
    return best;
}

struct TimedRoute {
    std::vector<int> route;
    std::vector<std::pair<double, double>> forward;  // compute interval per route node
    double e2e = kInf;
};

/// Forward intervals and e2e of a fixed route under the waiting rule.
inline TimedRoute time_fixed(const Topology& t, const std::vector<int>& route, const Blocks& blocks, double bytes) {
    TimedRoute out{route, {}, route_e2e(t, route, blocks, bytes)};
    if (out.e2e == kInf) return out;
    double clock = 0.0;
    for (size_t i = 0; i < route.size(); ++i) {
        const double arrive = i == 0 ? 0.0 : clock + comm(t, route[i - 1], route[i], bytes);
        const double f = t.compute_fwd_ms[route[i]];
        const double start = blocks.first_free(route[i], arrive, f);
        clock = start + f;
        out.forward.emplace_back(start, clock);
    }
    return out;
}

/// Every admissible route with its timing, in enumeration order.
inline std::vector<TimedRoute> all_routes(const Topology& t, const std::vector<std::vector<int>>& stages, int origin,
                                          int l, const std::vector<IntervalConstraint>& constraints, int agent,
                                          double bytes) {
    const Blocks blocks(constraints, agent);
    std::vector<TimedRoute> out;
    for_each_route(stages, origin, l, [&](const std::vector<int>& r) {
        auto timed = time_fixed(t, r, blocks, bytes);
        if (timed.e2e < kInf) out.push_back(std::move(timed));
    });
    return out;
}

inline bool forward_clash(const TimedRoute& a, const TimedRoute& b) {
    for (size_t i = 0; i < a.route.size(); ++i)
        for (size_t j = 0; j < b.route.size(); ++j)
            if (a.route[i] == b.route[j] &&
                std::min(a.forward[i].second, b.forward[j].second) - std::max(a.forward[i].first, b.forward[j].first) >
                    kOverlapToleranceMs)
                return true;
    return false;
}

/// Worst pairwise link inside any cluster.
inline double fitness(const Topology& t, const std::vector<std::vector<int>>& clusters, double bytes) {
    double worst = 0.0;
    for (const auto& c : clusters)
        for (size_t a = 0; a < c.size(); ++a)
            for (size_t b = a + 1; b < c.size(); ++b) worst = std::max(worst, comm(t, c[a], c[b], bytes));
    return worst;
}

/// Exhaustive search over all partitions with the given cluster sizes.
inline double best_partition_fitness(const Topology& t, const std::vector<int>& sizes, double bytes) {
    std::vector<std::vector<int>> clusters(sizes.size());
    double best = kInf;
    std::function<void(int)> place = [&](int node) {
        if (node == t.n) {
            best = std::min(best, fitness(t, clusters, bytes));
            return;
        }
        for (size_t c = 0; c < sizes.size(); ++c) {
            if (static_cast<int>(clusters[c].size()) == sizes[c]) continue;
            clusters[c].push_back(node);
            place(node + 1);
            clusters[c].pop_back();
        }
    };
    place(0);
    return best;
}

inline double mean_link(const Topology& t, const std::vector<int>& a, const std::vector<int>& b, double bytes) {
    double sum = 0.0;
    for (int x : a)
        for (int y : b) sum += comm(t, x, y, bytes);
    return sum / static_cast<double>(a.size() * b.size());
}

/// Cheapest closed tour over all orders that start at cluster `first`.
inline double best_tour(const Topology& t, const std::vector<std::vector<int>>& members, int first, double bytes) {
    std::vector<int> rest;
    for (int c = 0; c < static_cast<int>(members.size()); ++c)
        if (c != first) rest.push_back(c);
    double best = kInf;
    do {
        std::vector<int> order{first};
        order.insert(order.end(), rest.begin(), rest.end());
        double cost = 0.0;
        for (size_t i = 0; i < order.size(); ++i)
            cost += mean_link(t, members[order[i]], members[order[(i + 1) % order.size()]], bytes);
        best = std::min(best, cost);
    } while (std::next_permutation(rest.begin(), rest.end()));
    return best;
}

/// Cheapest perfect assignment by trying every permutation.
inline double best_assignment(const std::vector<std::vector<double>>& cost) {
    std::vector<int> perm(cost.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = kInf;
    do {
        double c = 0.0;
        for (size_t r = 0; r < perm.size(); ++r) c += cost[r][perm[r]];
        best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

/// Pairs of agents whose planned forward compute intervals overlap on a node.
inline int forward_overlaps(const std::vector<PathPlan>& paths) {
    struct Iv {
        int agent, node;
        double a, b;
    };
    std::vector<Iv> ivs;
    for (const auto& p : paths)
        for (size_t i = 0; i + 1 < p.visits.size(); ++i)
            ivs.push_back({p.agent, p.visits[i].node, p.visits[i].start, p.visits[i].end});
    int count = 0;
    for (size_t i = 0; i < ivs.size(); ++i)
        for (size_t j = i + 1; j < ivs.size(); ++j)
            if (ivs[i].node == ivs[j].node && ivs[i].agent != ivs[j].agent &&
                std::min(ivs[i].b, ivs[j].b) - std::max(ivs[i].a, ivs[j].a) > kOverlapToleranceMs)
                ++count;
    return count;
}

/// Same count for the mirrored backward intervals (informational).
inline int backward_overlaps(const std::vector<PathPlan>& paths) {
    std::vector<PathPlan> mirrored = paths;
    for (auto& p : mirrored) {
        p.visits = p.backward;
        p.visits.push_back(Visit{});  // forward_overlaps skips the last entry
    }
    return forward_overlaps(mirrored);
}

/// Visit counts per pipeline position, index 0 = S0.
inline std::vector<int> stage_visits(const std::vector<PathPlan>& paths, int s) {
    std::vector<int> counts(s, 0);
    for (const auto& p : paths)
        for (int st : p.stage_sequence()) ++counts[st];
    return counts;
}

/// Paths through each node (a path counts once per node).
inline std::vector<int> node_paths(const std::vector<PathPlan>& paths, int n) {
    std::vector<int> counts(n, 0);
    for (const auto& p : paths) {
        auto r = p.route();
        std::sort(r.begin(), r.end());
        r.erase(std::unique(r.begin(), r.end()), r.end());
        for (int v : r) ++counts[v];
    }
    return counts;
}

}  // namespace oracle

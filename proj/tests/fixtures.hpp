#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "skippipe/allocation.hpp"
#include "skippipe/random.hpp"
#include "skippipe/scheduler.hpp"
#include "skippipe/simulator.hpp"
#include "skippipe/topology.hpp"

namespace fixture {

using namespace skippipe;

/// Every link costs `latency + 1` ms for a 1000-byte message.
inline Topology uniform_links(std::vector<double> compute, double latency, int mem_capacity = 2, double bwd_ratio = 2.0) {
    const int n = static_cast<int>(compute.size());
    return make_topology(SquareMatrix(n, latency), SquareMatrix(n, 1000.0), std::move(compute), bwd_ratio, mem_capacity);
}
inline constexpr double kMsg = 1000.0;

/// Four single-node stages, compute 10 ms, every hop 5 ms.
inline Topology line_topology(int mem_capacity = 2) { return uniform_links({10, 10, 10, 10}, 4.0, mem_capacity); }

inline StageAssignment singleton_stages(int s) {
    StageAssignment a;
    a.s = s;
    for (int c = 0; c < s; ++c) {
        a.sizes.push_back(1);
        a.members.push_back({c});
        a.order.push_back(c);
    }
    return a;
}

struct Ev {
    double time;
    int node;
    TraceKind kind;
    int agent;
    int wave;
    bool backward;
};

inline std::vector<TraceEvent> to_trace(const std::vector<Ev>& evs) {
    std::vector<TraceEvent> out;
    for (const auto& e : evs) out.push_back(TraceEvent{e.time, e.node, e.kind, e.agent, e.wave, e.backward});
    return out;
}

constexpr auto L = TraceKind::Launch;
constexpr auto A = TraceKind::Arrive;
constexpr auto S = TraceKind::Start;
constexpr auto E = TraceKind::End;
constexpr auto C = TraceKind::Complete;
constexpr bool F = false;
constexpr bool B = true;

struct SimFixture {
    std::string name;
    Topology topology;
    std::vector<Route> routes;
    SimConfig config;
    std::vector<TraceEvent> expected;
    double makespan;
    double wait;
};

/// Agent 1 reaches node 0 at t=4 while agent 0 computes there until t=10.
/// Nodes: 0 = X (10 ms), 1 = A (10 ms), 2 = B (2 ms); every hop 2 ms.
inline SimFixture collision_fixture() {
    SimFixture f{"collision serialization", uniform_links({10, 10, 2}, 1.0), {{0, {0, 1}}, {1, {2, 0}}},
                 SimConfig{2, kMsg, true}, {}, 68.0, 6.0};
    f.expected = to_trace({
        {0, 0, L, 0, 0, F}, {0, 2, L, 1, 0, F},
        {0, 0, A, 0, 0, F}, {0, 2, A, 1, 0, F},
        {0, 0, S, 0, 0, F}, {0, 2, S, 1, 0, F},
        {2, 2, E, 1, 0, F},
        {4, 0, A, 1, 0, F},
        {10, 0, E, 0, 0, F}, {10, 0, S, 1, 0, F},
        {12, 1, A, 0, 0, F}, {12, 1, S, 0, 0, F},
        {20, 0, E, 1, 0, F},
        {22, 1, E, 0, 0, F},
        {24, 0, A, 1, 0, B}, {24, 0, S, 1, 0, B},
        {26, 1, A, 0, 0, B}, {26, 1, S, 0, 0, B},
        {44, 0, E, 1, 0, B},
        {46, 1, E, 0, 0, B}, {46, 2, A, 1, 0, B}, {46, 2, S, 1, 0, B},
        {48, 0, A, 0, 0, B}, {48, 0, S, 0, 0, B},
        {50, 2, E, 1, 0, B}, {50, 2, C, 1, 0, B},
        {68, 0, E, 0, 0, B}, {68, 0, C, 0, 0, B},
    });
    return f;
}

/// Node 0 is busy with agent 1's backward until t=9. Agent 2's forward
/// (queued at 7.5) and agent 0's backward (queued at 8) wait; the backward
/// goes first. Agent 2 queues 3.5 ms and agent 0 queues 1 ms.
/// Nodes: 0 = X (1 ms), 1 = A (1 ms), 2 = B (3 ms), 3 = C (6.5 ms); every
/// hop 1 ms.
inline SimFixture one_f_one_b_fixture() {
    SimFixture f{"1F1B priority", uniform_links({1, 1, 3, 6.5}, 0.5),
                 {{0, {0, 1}}, {1, {2, 0}}, {2, {3, 0}}}, SimConfig{3, 500.0, true}, {}, 30.0, 4.5};
    f.expected = to_trace({
        {0, 0, L, 0, 0, F}, {0, 2, L, 1, 0, F}, {0, 3, L, 2, 0, F},
        {0, 0, A, 0, 0, F}, {0, 2, A, 1, 0, F}, {0, 3, A, 2, 0, F},
        {0, 0, S, 0, 0, F}, {0, 2, S, 1, 0, F}, {0, 3, S, 2, 0, F},
        {1, 0, E, 0, 0, F},
        {2, 1, A, 0, 0, F}, {2, 1, S, 0, 0, F},
        {3, 2, E, 1, 0, F}, {3, 1, E, 0, 0, F},
        {4, 0, A, 1, 0, F}, {4, 0, S, 1, 0, F},
        {5, 1, A, 0, 0, B}, {5, 0, E, 1, 0, F}, {5, 1, S, 0, 0, B},
        {6.5, 3, E, 2, 0, F},
        {7, 0, A, 1, 0, B}, {7, 1, E, 0, 0, B}, {7, 0, S, 1, 0, B},
        {7.5, 0, A, 2, 0, F},
        {8, 0, A, 0, 0, B},
        {9, 0, E, 1, 0, B}, {9, 0, S, 0, 0, B},
        {10, 2, A, 1, 0, B}, {10, 2, S, 1, 0, B},
        {11, 0, E, 0, 0, B}, {11, 0, C, 0, 0, B}, {11, 0, S, 2, 0, F},
        {12, 0, E, 2, 0, F},
        {14, 0, A, 2, 0, B}, {14, 0, S, 2, 0, B},
        {16, 2, E, 1, 0, B}, {16, 2, C, 1, 0, B}, {16, 0, E, 2, 0, B},
        {17, 3, A, 2, 0, B}, {17, 3, S, 2, 0, B},
        {30, 3, E, 2, 0, B}, {30, 3, C, 2, 0, B},
    });
    return f;
}

/// One pipeline over the line instance, memory cap 1, two waves: the second
/// microbatch launches when the first completes at its origin.
inline SimFixture wave_reuse_fixture() {
    SimFixture f{"wave reuse", line_topology(1), {{0, {0, 1, 2, 3}}}, SimConfig{2, kMsg, true}, {}, 320.0, 0.0};
    std::vector<Ev> evs;
    for (int w = 0; w < 2; ++w) {
        const double o = 160.0 * w;
        std::vector<Ev> one = {
            {o + 0, 0, L, 0, w, F}, {o + 0, 0, A, 0, w, F}, {o + 0, 0, S, 0, w, F}, {o + 10, 0, E, 0, w, F},
            {o + 15, 1, A, 0, w, F}, {o + 15, 1, S, 0, w, F}, {o + 25, 1, E, 0, w, F},
            {o + 30, 2, A, 0, w, F}, {o + 30, 2, S, 0, w, F}, {o + 40, 2, E, 0, w, F},
            {o + 45, 3, A, 0, w, F}, {o + 45, 3, S, 0, w, F}, {o + 55, 3, E, 0, w, F},
            {o + 65, 3, A, 0, w, B}, {o + 65, 3, S, 0, w, B}, {o + 85, 3, E, 0, w, B},
            {o + 90, 2, A, 0, w, B}, {o + 90, 2, S, 0, w, B}, {o + 110, 2, E, 0, w, B},
            {o + 115, 1, A, 0, w, B}, {o + 115, 1, S, 0, w, B}, {o + 135, 1, E, 0, w, B},
            {o + 140, 0, A, 0, w, B}, {o + 140, 0, S, 0, w, B}, {o + 160, 0, E, 0, w, B}, {o + 160, 0, C, 0, w, B},
        };
        evs.insert(evs.end(), one.begin(), one.end());
    }
    f.expected = to_trace(evs);
    return f;
}

/// Random heterogeneous topology for oracle comparisons.
inline Topology random_topology(int n, Rng& rng, int mem_capacity = 2) {
    SquareMatrix lat(n), bw(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) {
                lat(i, j) = rng.uniform(1.0, 60.0);
                bw(i, j) = rng.uniform(500.0, 20000.0);
            }
    std::vector<double> compute(n);
    for (auto& c : compute) c = rng.uniform(5.0, 60.0);
    return make_topology(lat, bw, compute, rng.uniform(1.0, 3.0), mem_capacity);
}

/// Random partition of n nodes into s non-empty clusters. Cluster 0 leads
/// the pipeline; the other positions are shuffled.
inline StageAssignment random_assignment(int n, int s, Rng& rng) {
    std::vector<int> nodes(n);
    for (int i = 0; i < n; ++i) nodes[i] = i;
    for (int i = n - 1; i > 0; --i) std::swap(nodes[i], nodes[rng.below(i + 1)]);
    StageAssignment a;
    a.s = s;
    a.members.assign(s, {});
    for (int c = 0; c < s; ++c) a.members[c].push_back(nodes[c]);
    for (int i = s; i < n; ++i) a.members[rng.below(s)].push_back(nodes[i]);
    for (auto& m : a.members) {
        std::sort(m.begin(), m.end());
        a.sizes.push_back(static_cast<int>(m.size()));
    }
    for (int c = 0; c < s; ++c) a.order.push_back(c);
    for (int i = s - 1; i > 1; --i) std::swap(a.order[i], a.order[1 + rng.below(i)]);
    return a;
}

}  // namespace fixture

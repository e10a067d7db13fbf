#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "skippipe/baselines.hpp"
#include "skippipe/error.hpp"
#include "skippipe/experiment.hpp"

using namespace skippipe;

namespace {

AllocationOptions options(int s) {
    AllocationOptions opt;
    opt.dp_msg_bytes = stage_parameter_bytes(model_preset("llama-1.5b"), s);
    opt.activation_bytes = activation_bytes(model_preset("llama-1.5b"), 1);
    opt.ga.generations = 100;
    return opt;
}

SchedulerConfig config_for(double k, double msg) {
    SchedulerConfig c;
    c.k = k;
    c.msg_bytes = msg;
    return c;
}

}  // namespace

TEST_CASE("min_cost_assignment matches 4! enumeration") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::vector<double>> cost(4, std::vector<double>(4));
        for (auto& row : cost)
            for (auto& c : row) c = rng.uniform(0.0, 100.0);
        const auto pick = min_cost_assignment(cost);
        double got = 0.0;
        std::vector<int> cols = pick;
        for (int r = 0; r < 4; ++r) got += cost[r][pick[r]];
        std::sort(cols.begin(), cols.end());
        CHECK(cols == std::vector<int>{0, 1, 2, 3});
        CHECK(got == doctest::Approx(oracle::best_assignment(cost)).epsilon(1e-12));
    }
    const std::vector<std::vector<double>> flat(3, std::vector<double>(3, 1.0));
    CHECK(min_cost_assignment(flat) == std::vector<int>{0, 1, 2});
}

TEST_CASE("dtfm_full builds disjoint full pipelines") {
    const auto t = sample_topology(default_geo_profile(16, 3));
    const auto s = dtfm_full(t, 4, options(4), 1e6);
    CHECK(s.kind == BaselineKind::DtfmFull);
    REQUIRE(s.solution.paths.size() == 8);  // m = 2 per S0 node
    std::vector<int> owner(16, -1);
    for (const auto& p : s.solution.paths) {
        const auto route = p.route();
        CHECK(route.size() == 4);
        const auto seq = p.stage_sequence();
        CHECK(seq == std::vector<int>{0, 1, 2, 3});
        for (int v : route) {
            const int pipeline = p.agent % 4;
            CHECK((owner[v] == -1 || owner[v] == pipeline));
            owner[v] = pipeline;
        }
    }
    for (int o : owner) CHECK(o >= 0);
    CHECK_THROWS_AS(dtfm_full(t, 3, options(3), 1e6), ValidationError);
}

TEST_CASE("dtfm_full on a homogeneous network gives identical pipelines") {
    const auto t = fixture::uniform_links(std::vector<double>(16, 10.0), 4.0);
    const auto s = dtfm_full(t, 4, options(4), fixture::kMsg);
    for (const auto& p : s.solution.paths) CHECK(p.e2e == s.solution.paths[0].e2e);
}

TEST_CASE("dtfm_full matching is optimal between adjacent stages") {
    Rng rng(8);
    const auto t = fixture::random_topology(16, rng);
    const auto s = dtfm_full(t, 4, options(4), 3000.0);
    const StageLayout layout(s.assignment, 16, 0.0);
    for (int p = 1; p < 4; ++p) {
        // Stage p-1 nodes in pipeline order, then the cost of the chosen matching.
        std::vector<int> from, to;
        for (int i = 0; i < 4; ++i) {
            from.push_back(s.solution.paths[i].route()[p - 1]);
            to.push_back(s.solution.paths[i].route()[p]);
        }
        std::vector<std::vector<double>> cost(4, std::vector<double>(4));
        double chosen = 0.0;
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) cost[i][j] = comm_time(t, from[i], layout.stages[p][j], 3000.0);
            chosen += comm_time(t, from[i], to[i], 3000.0);
        }
        CHECK(chosen == doctest::Approx(oracle::best_assignment(cost)).epsilon(1e-12));
    }
}

TEST_CASE("dtfm_skip ignores the true costs when planning") {
    const auto t = sample_topology(default_geo_profile(18, 6));
    const auto a = allocate(t, 4, 25.0, options(4));
    auto scaled = t;
    for (int i = 0; i < t.n; ++i) {
        scaled.compute_fwd_ms[i] *= 10.0;
        for (int j = 0; j < t.n; ++j) {
            scaled.latency_ms(i, j) *= 10.0;
            scaled.bandwidth_bytes_per_ms(i, j) /= 10.0;
        }
    }
    const auto cfg = config_for(25.0, 1e6);
    const auto x = dtfm_skip(t, a, cfg);
    const auto y = dtfm_skip(scaled, a, cfg);
    REQUIRE(x.solution.paths.size() == y.solution.paths.size());
    for (size_t i = 0; i < x.solution.paths.size(); ++i) CHECK(x.solution.paths[i].route() == y.solution.paths[i].route());
}

TEST_CASE("dtfm_skip and no-TC2 satisfy CC1 and TC1") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto t = sample_topology(default_geo_profile(18, seed));
        const auto a = allocate(t, 4, 25.0, options(4));
        const StageLayout layout(a, 18, 25.0);
        const auto cfg = config_for(25.0, 1e6);
        for (const auto& s : {dtfm_skip(t, a, cfg), skippipe_no_tc2(t, a, cfg)}) {
            for (const auto& p : s.solution.paths) CHECK(layout.stage_of[p.origin()] == 0);
            for (int c : oracle::node_paths(s.solution.paths, 18)) CHECK(c <= t.mem_capacity);
        }
    }
}

TEST_CASE("dtfm_skip walks into a slow node that SkipPipe avoids") {
    // Spare capacity: 4 agents, 8 visits, 9 non-first nodes with room for 2 each.
    auto t = fixture::uniform_links(std::vector<double>(11, 10.0), 4.0);
    t.compute_fwd_ms[2] = 400.0;
    StageAssignment a;
    a.s = 4;
    a.sizes = {2, 3, 3, 3};
    a.members = {{0, 1}, {2, 3, 4}, {5, 6, 7}, {8, 9, 10}};
    a.order = {0, 1, 2, 3};
    const auto cfg = config_for(25.0, fixture::kMsg);
    const auto base = dtfm_skip(t, a, cfg);
    const auto ours = skippipe_full(t, a, cfg);
    CHECK(oracle::node_paths(base.solution.paths, 11)[2] > 0);
    CHECK(oracle::node_paths(ours.solution.paths, 11)[2] == 0);
    const SimConfig sim{8, fixture::kMsg, false};
    CHECK(simulate(base, t, sim).makespan >= simulate(ours, t, sim).makespan);
}

TEST_CASE("no-TC2 equals SkipPipe when nothing can collide") {
    const auto t = fixture::line_topology(1);
    const auto a = fixture::singleton_stages(4);
    const auto cfg = config_for(0.0, fixture::kMsg);
    const auto x = skippipe_no_tc2(t, a, cfg);
    const auto y = skippipe_full(t, a, cfg);
    CHECK(x.solution.cost == y.solution.cost);
    CHECK(x.solution.paths[0].route() == y.solution.paths[0].route());
}

TEST_CASE("collision resolution pays off on a contended fixture") {
    // Both S0 nodes prefer node 2; node 3 is slightly farther.
    SquareMatrix lat(4, 50.0);
    for (int o : {0, 1}) {
        lat(o, 2) = lat(2, o) = 4.0;
        lat(o, 3) = lat(3, o) = 4.5;
    }
    const auto t = make_topology(lat, SquareMatrix(4, 1000.0), {9, 10, 10, 10}, 2.0, 2);
    StageAssignment a;
    a.s = 2;
    a.sizes = {2, 2};
    a.members = {{0, 1}, {2, 3}};
    a.order = {0, 1};
    const auto cfg = config_for(0.0, 1000.0);
    const auto plain = skippipe_no_tc2(t, a, cfg);
    const auto full = skippipe_full(t, a, cfg);
    CHECK(oracle::forward_overlaps(full.solution.paths) == 0);
    const SimConfig sim{4, 1000.0, false};
    CHECK(simulate(plain, t, sim).makespan >= simulate(full, t, sim).makespan);
}

TEST_CASE("compensate scales by the node ratio") {
    CHECK(compensate(18.0, 18, 20) == doctest::Approx(16.2));
    CHECK(compensate(7.5, 9, 9) == 7.5);
    CHECK(compensate(10.0, 16, 18) == doctest::Approx(8.888888888888889));
    CHECK(compensate(10.0, 16, 18) <= 10.0);
    CHECK(compensate(20.0, 16, 18) == doctest::Approx(2 * compensate(10.0, 16, 18)));
    CHECK_THROWS_AS(compensate(1.0, 0, 18), ValidationError);
    CHECK_THROWS_AS(compensate(1.0, 3, 0), ValidationError);
    CHECK_THROWS_AS(compensate(1.0, 19, 18), ValidationError);
}

TEST_CASE("baseline names round-trip") {
    for (auto k : {BaselineKind::DtfmFull, BaselineKind::DtfmSkip, BaselineKind::SkipPipeNoTc2, BaselineKind::SkipPipe})
        CHECK(baseline_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(baseline_from_string("fastest"), ValidationError);
}

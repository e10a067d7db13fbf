#include "skippipe/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "skippipe/baselines.hpp"
#include "skippipe/error.hpp"
#include "skippipe/random.hpp"

namespace skippipe {

TopologyProfile default_geo_profile(int n_nodes, std::uint64_t seed) {
    if (n_nodes < 1) throw ValidationError("profile needs at least one node");
    TopologyProfile p;
    const int regions = std::max(1, (n_nodes + 4) / 5);
    for (int r = 0; r < regions; ++r) p.nodes_per_region.push_back(n_nodes / regions + (r < n_nodes % regions ? 1 : 0));
    p.intra_latency_ms = {1.0, 5.0};
    p.inter_latency_ms = {20.0, 150.0};
    p.intra_bandwidth_bytes_per_ms = {625'000.0, 1'250'000.0};  // 5-10 Gbit/s
    p.inter_bandwidth_bytes_per_ms = {12'500.0, 125'000.0};     // 0.1-1 Gbit/s
    p.compute_fwd_ms = {100.0, 100.0};
    p.bwd_ratio = 2.0;
    p.mem_capacity = 2;
    p.seed = seed;
    return p;
}

void validate(const ExperimentSpec& spec) {
    if (!spec.profile && !spec.topology_file) throw ValidationError("experiment needs a profile or a topology file");
    if (spec.repetitions < 1) throw ValidationError("repetitions must be at least 1");
    if (spec.mem_capacity < 1) throw ValidationError("mem_capacity must be at least 1");
    if (spec.total_microbatches < 1) throw ValidationError("total_microbatches must be positive");
    if (spec.variants.empty()) throw ValidationError("no variants requested");
    if (spec.samples_per_microbatch < 1) throw ValidationError("samples_per_microbatch must be positive");
    validate(spec.preset);
    validate(spec.ga);
    spec.preset.layers_per_stage(spec.stages);
    visited_stage_count(spec.stages, spec.k);
}

void to_json(json& j, const ExperimentSpec& spec) {
    std::vector<std::string> variants;
    for (auto v : spec.variants) variants.push_back(to_string(v));
    j = json{{"stages", spec.stages},
             {"skip_percent", spec.k},
             {"mem_capacity", spec.mem_capacity},
             {"samples_per_microbatch", spec.samples_per_microbatch},
             {"preset", spec.preset},
             {"total_microbatches", spec.total_microbatches},
             {"variants", variants},
             {"repetitions", spec.repetitions},
             {"seed", spec.seed},
             {"ga", spec.ga},
             {"scheduler", spec.scheduler},
             {"threads", spec.threads}};
    if (spec.profile) j["profile"] = *spec.profile;
    if (spec.topology_file) j["topology_file"] = spec.topology_file->string();
}

void from_json(const json& j, ExperimentSpec& spec) {
    if (j.contains("profile")) {
        if (j.at("profile").is_string() && j.at("profile").get<std::string>() == "geo")
            spec.profile = default_geo_profile(j.value("nodes", 20));
        else
            spec.profile = j.at("profile").get<TopologyProfile>();
    }
    if (j.contains("topology_file")) spec.topology_file = j.at("topology_file").get<std::string>();
    spec.stages = j.value("stages", spec.stages);
    spec.k = j.value("skip_percent", spec.k);
    spec.mem_capacity = j.value("mem_capacity", spec.mem_capacity);
    spec.samples_per_microbatch = j.value("samples_per_microbatch", spec.samples_per_microbatch);
    if (j.contains("preset")) spec.preset = j.at("preset").get<ModelPreset>();
    spec.total_microbatches = j.value("total_microbatches", spec.total_microbatches);
    if (j.contains("variants")) {
        spec.variants.clear();
        for (const auto& v : j.at("variants")) spec.variants.push_back(baseline_from_string(v.get<std::string>()));
    }
    spec.repetitions = j.value("repetitions", spec.repetitions);
    spec.seed = j.value("seed", spec.seed);
    if (j.contains("ga")) spec.ga = j.at("ga").get<GAConfig>();
    if (j.contains("scheduler")) spec.scheduler = j.at("scheduler").get<SchedulerConfig>();
    spec.threads = j.value("threads", spec.threads);
    validate(spec);
}

namespace {

std::string file_stem(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::DtfmFull: return "dtfm_full";
        case BaselineKind::DtfmSkip: return "dtfm_skip";
        case BaselineKind::SkipPipeNoTc2: return "skippipe_no_tc2";
        case BaselineKind::SkipPipe: return "skippipe";
    }
    return "unknown";
}

Topology repetition_topology(const ExperimentSpec& spec, std::uint64_t seed) {
    Topology t;
    if (spec.topology_file) {
        t = read_json(*spec.topology_file).get<Topology>();
    } else {
        TopologyProfile p = *spec.profile;
        p.seed = seed;
        t = sample_topology(p);
    }
    t.mem_capacity = spec.mem_capacity;
    return t;
}

// Nodes the full-pipeline baseline runs on: the SkipPipe arrangement without
// the extra S0 nodes, so every stage keeps the non-first stage size.
std::vector<int> full_pipeline_nodes(const StageAssignment& a) {
    const auto stages = a.pipeline();
    const size_t keep = stages.size() > 1 ? stages[1].size() : stages[0].size();
    std::vector<int> nodes;
    for (size_t p = 0; p < stages.size(); ++p) {
        std::vector<int> members = stages[p];
        std::sort(members.begin(), members.end());
        if (p == 0 && members.size() > keep) members.resize(keep);
        nodes.insert(nodes.end(), members.begin(), members.end());
    }
    std::sort(nodes.begin(), nodes.end());
    return nodes;
}

}  // namespace

RepetitionResult run_repetition(const ExperimentSpec& spec, int index) {
    RepetitionResult rep;
    rep.index = index;
    rep.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(index));
    try {
        const Topology topology = repetition_topology(spec, rep.seed);
        const double msg = activation_bytes(spec.preset, spec.samples_per_microbatch);
        AllocationOptions alloc;
        alloc.ga = spec.ga;
        alloc.ga.seed = derive_seed(rep.seed, 1);
        alloc.activation_bytes = msg;
        alloc.dp_msg_bytes = stage_parameter_bytes(spec.preset, spec.stages);
        const StageAssignment assignment = allocate(topology, spec.stages, spec.k, alloc);

        SchedulerConfig sched = spec.scheduler;
        sched.k = spec.k;
        sched.msg_bytes = msg;
        SimConfig sim;
        sim.total_microbatches = spec.total_microbatches;
        sim.msg_bytes = msg;

        for (BaselineKind kind : spec.variants) {
            VariantOutcome out;
            out.kind = kind;
            out.nodes_total = topology.n;
            out.nodes_used = topology.n;
            try {
                if (kind == BaselineKind::DtfmFull) {
                    const auto nodes = full_pipeline_nodes(assignment);
                    const Topology sub = induced_subtopology(topology, nodes);
                    Schedule s = dtfm_full(sub, spec.stages, alloc, msg);
                    out.report = simulate(s, sub, sim);
                    out.nodes_used = sub.n;
                    // Report schedule node ids in the full topology's numbering.
                    for (auto& members : s.assignment.members)
                        for (auto& v : members) v = nodes[v];
                    for (auto& agent : s.agents) agent.origin = nodes[agent.origin];
                    for (auto& path : s.solution.paths) {
                        for (auto& v : path.visits) v.node = nodes[v.node];
                        for (auto& v : path.backward) v.node = nodes[v.node];
                    }
                    out.schedule = std::move(s);
                } else {
                    Schedule s = kind == BaselineKind::DtfmSkip        ? dtfm_skip(topology, assignment, sched)
                                 : kind == BaselineKind::SkipPipeNoTc2 ? skippipe_no_tc2(topology, assignment, sched)
                                                                       : skippipe_full(topology, assignment, sched);
                    out.report = simulate(s, topology, sim);
                    out.schedule = std::move(s);
                }
                out.ok = true;
                out.resolved = out.schedule->resolved;
                out.makespan_ms = out.report->makespan;
                out.reported_ms = compensate(out.makespan_ms, out.nodes_used, out.nodes_total);
            } catch (const std::exception& e) {
                out.ok = false;
                out.error = e.what();
            }
            rep.outcomes.push_back(std::move(out));
        }
    } catch (const std::exception& e) {
        rep.error = e.what();
    }
    return rep;
}

namespace {

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

const VariantOutcome* find_outcome(const RepetitionResult& rep, BaselineKind kind) {
    for (const auto& o : rep.outcomes)
        if (o.kind == kind && o.ok) return &o;
    return nullptr;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir) {
    validate(spec);
    ExperimentResult result;
    result.repetitions.resize(spec.repetitions);

    const int threads = std::max(1, std::min(spec.repetitions, spec.threads > 0
                                                                  ? spec.threads
                                                                  : static_cast<int>(std::thread::hardware_concurrency())));
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < threads; ++w)
        workers.emplace_back([&] {
            for (int i = next++; i < spec.repetitions; i = next++) result.repetitions[i] = run_repetition(spec, i);
        });
    for (auto& w : workers) w.join();

    std::ostringstream agg;
    agg << "repetition,seed,variant,status,resolved,makespan_ms,reported_ms,nodes_used,nodes_total,time_vs_skippipe\n";
    std::map<BaselineKind, std::vector<double>> reported;
    std::map<BaselineKind, std::vector<double>> reduction;
    std::map<BaselineKind, int> failures;
    for (const auto& rep : result.repetitions) {
        const VariantOutcome* reference = find_outcome(rep, BaselineKind::SkipPipe);
        for (BaselineKind kind : spec.variants) {
            const VariantOutcome* o = nullptr;
            for (const auto& x : rep.outcomes)
                if (x.kind == kind) o = &x;
            agg << rep.index << ',' << rep.seed << ',' << to_string(kind) << ',';
            if (!o || !o->ok) {
                ++failures[kind];
                ++result.failures;
                agg << "failed,,,,,,\n";
                continue;
            }
            reported[kind].push_back(o->reported_ms);
            agg << "ok," << (o->resolved ? 1 : 0) << ',' << format_number(o->makespan_ms) << ','
                << format_number(o->reported_ms) << ',' << o->nodes_used << ',' << o->nodes_total << ',';
            if (reference) {
                agg << format_number(o->reported_ms / reference->reported_ms);
                reduction[kind].push_back(1.0 - reference->reported_ms / o->reported_ms);
            }
            agg << '\n';
        }
    }
    result.aggregate_csv = agg.str();

    std::ostringstream sum;
    sum << "variant,runs,failures,mean_ms,stddev_ms,mean_skippipe_reduction\n";
    for (BaselineKind kind : spec.variants) {
        const auto& v = reported[kind];
        sum << to_string(kind) << ',' << v.size() << ',' << failures[kind] << ',' << format_number(mean(v)) << ','
            << format_number(stddev(v)) << ',' << format_number(mean(reduction[kind])) << '\n';
    }
    result.summary_csv = sum.str();

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_json(out_dir / "experiment.json", json(spec));
        for (const auto& rep : result.repetitions) {
            char name[32];
            std::snprintf(name, sizeof name, "rep_%03d", rep.index);
            const auto dir = out_dir / name;
            std::filesystem::create_directories(dir);
            for (const auto& o : rep.outcomes) {
                if (!o.ok) continue;
                write_json(dir / (file_stem(o.kind) + ".schedule.json"), json(*o.schedule));
                write_json(dir / (file_stem(o.kind) + ".report.json"), json(*o.report));
            }
        }
        write_text(out_dir / "aggregate.csv", result.aggregate_csv);
        write_text(out_dir / "summary.csv", result.summary_csv);
    }
    return result;
}

}  // namespace skippipe

// skippipe: command-line front end for topology generation, allocation,
// scheduling, simulation, comparison, batch experiments and Gantt charts.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "skippipe/allocation.hpp"
#include "skippipe/baselines.hpp"
#include "skippipe/error.hpp"
#include "skippipe/experiment.hpp"
#include "skippipe/gantt.hpp"
#include "skippipe/scheduler.hpp"
#include "skippipe/serialization.hpp"
#include "skippipe/simulator.hpp"
#include "skippipe/topology.hpp"

namespace fs = std::filesystem;
using namespace skippipe;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitPartial = 3;

struct Common {
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string config;
    bool trace = false;
};

fs::path out_dir(const Common& c) {
    if (!c.out_dir.empty()) return c.out_dir;
    if (const char* env = std::getenv("SKIPPIPE_OUT_DIR"); env && *env) return env;
    return "out";
}

std::optional<json> config_json(const Common& c) {
    if (c.config.empty()) return std::nullopt;
    return read_json(c.config);
}

void announce(const fs::path& p) { std::cout << p.string() << '\n'; }

struct ModelArgs {
    std::string preset = "llama-1.5b";
    int samples = 1;
    double msg_bytes() const { return activation_bytes(model_preset(preset), samples); }
};

void add_model_args(CLI::App* app, ModelArgs& m) {
    app->add_option("--preset", m.preset, "model preset")->capture_default_str();
    app->add_option("--samples", m.samples, "samples per microbatch")->capture_default_str();
}

int gen_topology(const Common& c, int nodes) {
    TopologyProfile profile = default_geo_profile(nodes);
    if (auto j = config_json(c)) profile = j->get<TopologyProfile>();
    if (c.seed) profile.seed = *c.seed;
    const Topology t = sample_topology(profile);
    const auto path = out_dir(c) / "topology.json";
    write_json(path, json(t));
    announce(path);
    return kExitOk;
}

int allocate_cmd(const Common& c, const std::string& topology_file, int stages, double k, const ModelArgs& m) {
    const Topology t = read_json(topology_file).get<Topology>();
    AllocationOptions options;
    if (auto j = config_json(c)) options.ga = j->get<GAConfig>();
    if (c.seed) options.ga.seed = *c.seed;
    const ModelPreset preset = model_preset(m.preset);
    options.activation_bytes = m.msg_bytes();
    options.dp_msg_bytes = stage_parameter_bytes(preset, stages);
    const StageAssignment a = allocate(t, stages, k, options);
    const auto path = out_dir(c) / "assignment.json";
    write_json(path, json(a));
    announce(path);
    return kExitOk;
}

int schedule_cmd(const Common& c, const std::string& topology_file, const std::string& assignment_file,
                 const std::string& variant, double k, int stages, const ModelArgs& m) {
    const Topology t = read_json(topology_file).get<Topology>();
    const BaselineKind kind = baseline_from_string(variant);
    SchedulerConfig config;
    if (auto j = config_json(c)) config = j->get<SchedulerConfig>();
    config.k = k;
    config.msg_bytes = m.msg_bytes();
    Schedule s;
    if (kind == BaselineKind::DtfmFull) {
        AllocationOptions options;
        if (c.seed) options.ga.seed = *c.seed;
        options.activation_bytes = config.msg_bytes;
        options.dp_msg_bytes = stage_parameter_bytes(model_preset(m.preset), stages);
        s = dtfm_full(t, stages, options, config.msg_bytes);
    } else {
        if (assignment_file.empty()) throw ValidationError("--assignment is required for variant " + variant);
        const StageAssignment a = read_json(assignment_file).get<StageAssignment>();
        s = kind == BaselineKind::DtfmSkip        ? dtfm_skip(t, a, config)
            : kind == BaselineKind::SkipPipeNoTc2 ? skippipe_no_tc2(t, a, config)
                                                  : skippipe_full(t, a, config);
    }
    const auto path = out_dir(c) / "schedule.json";
    write_json(path, json(s));
    announce(path);
    if (!s.resolved) {
        std::cerr << "schedule: conflicts remain after the expansion budget\n";
        return kExitInfeasible;
    }
    return kExitOk;
}

SimConfig sim_config(const Schedule& s, int microbatches, bool trace) {
    SimConfig sim;
    sim.total_microbatches = microbatches > 0 ? microbatches : static_cast<int>(s.agents.size());
    sim.msg_bytes = s.config.msg_bytes;
    sim.record_trace = trace;
    return sim;
}

int simulate_cmd(const Common& c, const std::string& topology_file, const std::string& schedule_file,
                 int microbatches) {
    const Topology t = read_json(topology_file).get<Topology>();
    const Schedule s = read_json(schedule_file).get<Schedule>();
    const SimReport r = simulate(s, t, sim_config(s, microbatches, c.trace));
    const auto dir = out_dir(c);
    write_json(dir / "report.json", json(r));
    announce(dir / "report.json");
    if (c.trace) {
        write_text(dir / "trace.csv", trace_csv(r.trace));
        announce(dir / "trace.csv");
    }
    return kExitOk;
}

int compare_cmd(const Common& c, const std::string& topology_file, const std::vector<std::string>& entries,
                int microbatches) {
    const Topology t = read_json(topology_file).get<Topology>();
    std::map<std::string, Schedule> schedules;
    for (const auto& e : entries) {
        const auto eq = e.find('=');
        std::string name, file;
        if (eq == std::string::npos) {
            file = e;
            name = fs::path(e).stem().string();
        } else {
            name = e.substr(0, eq);
            file = e.substr(eq + 1);
        }
        if (!schedules.emplace(name, read_json(file).get<Schedule>()).second)
            throw ValidationError("duplicate schedule name " + name);
    }
    if (schedules.empty()) throw ValidationError("compare needs at least one schedule");
    const Schedule& first = schedules.begin()->second;
    const Comparison cmp = compare(schedules, t, sim_config(first, microbatches, false));

    json rows = json::array();
    std::ostringstream csv;
    csv << "name,makespan_ms,total_wait_ms,speedup_vs_first";
    for (const auto& row : cmp.rows) csv << ",vs_" << row.name;
    csv << '\n';
    for (size_t a = 0; a < cmp.rows.size(); ++a) {
        const auto& row = cmp.rows[a];
        rows.push_back(json{{"name", row.name},
                            {"iteration_makespan_ms", row.report.makespan},
                            {"total_wait_ms", row.report.total_wait_ms},
                            {"speedup_vs_first", row.speedup_vs_first}});
        csv << row.name << ',' << format_number(row.report.makespan) << ','
            << format_number(row.report.total_wait_ms) << ',' << format_number(row.speedup_vs_first);
        for (double v : cmp.pairwise_speedup[a]) csv << ',' << format_number(v);
        csv << '\n';
    }
    const auto dir = out_dir(c);
    write_json(dir / "comparison.json", json{{"rows", rows}, {"pairwise_speedup", cmp.pairwise_speedup}});
    write_text(dir / "comparison.csv", csv.str());
    announce(dir / "comparison.json");
    announce(dir / "comparison.csv");
    return kExitOk;
}

int experiment_cmd(const Common& c) {
    if (c.config.empty()) throw ValidationError("experiment requires --config <experiment.json>");
    ExperimentSpec spec = read_json(c.config).get<ExperimentSpec>();
    if (spec.topology_file && spec.topology_file->is_relative())
        spec.topology_file = fs::path(c.config).parent_path() / *spec.topology_file;
    if (c.seed) spec.seed = *c.seed;
    const auto dir = out_dir(c);
    const ExperimentResult r = run_experiment(spec, dir);
    std::cout << r.summary_csv;
    announce(dir / "aggregate.csv");
    announce(dir / "summary.csv");
    for (const auto& rep : r.repetitions) {
        if (!rep.error.empty()) std::cerr << "repetition " << rep.index << ": " << rep.error << '\n';
        for (const auto& o : rep.outcomes)
            if (!o.ok) std::cerr << "repetition " << rep.index << " " << to_string(o.kind) << ": " << o.error << '\n';
    }
    return r.failures > 0 ? kExitPartial : kExitOk;
}

int gantt_cmd(const Common& c, const std::string& report_file) {
    const json j = read_json(report_file);
    const int n = static_cast<int>(j.at("node_busy_ms").size());
    const std::string svg = emit_gantt(trace_from_json(j), n);
    const auto path = out_dir(c) / "gantt.svg";
    write_text(path, svg);
    announce(path);
    return kExitOk;
}

// "25", "33.3333" or an exact fraction such as "100/3".
double parse_percent(const std::string& text) {
    const auto slash = text.find('/');
    try {
        size_t used = 0;
        if (slash == std::string::npos) {
            const double v = std::stod(text, &used);
            if (used == text.size()) return v;
        } else {
            const std::string num = text.substr(0, slash), den = text.substr(slash + 1);
            size_t used_den = 0;
            const double a = std::stod(num, &used), b = std::stod(den, &used_den);
            if (used == num.size() && used_den == den.size() && b != 0.0) return a / b;
        }
    } catch (const std::logic_error&) {
    }
    throw ValidationError("--skip expects a number or a fraction like 100/3, got '" + text + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Skip-pipeline planning and simulation for heterogeneous training clusters"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--seed", common.seed, "master seed");
    app.add_option("--out-dir", common.out_dir, "output directory (env SKIPPIPE_OUT_DIR, default ./out)");
    app.add_option("--config", common.config, "JSON configuration file");
    app.add_flag("--trace", common.trace, "record and write the event trace");

    int nodes = 20;
    auto* gen = app.add_subcommand("gen-topology", "sample a geo-distributed topology");
    gen->add_option("--nodes", nodes, "node count for the built-in profile")->capture_default_str();

    std::string topology_file, assignment_file, schedule_file, report_file, variant = "SkipPipe";
    int stages = 4;
    std::string skip = "25";
    int microbatches = 0;
    ModelArgs model;
    std::vector<std::string> entries;

    auto* alloc = app.add_subcommand("allocate", "cluster nodes into stages and order them");
    alloc->add_option("--topology", topology_file)->required();
    alloc->add_option("--stages", stages)->capture_default_str();
    alloc->add_option("--skip", skip, "skip percent, e.g. 25 or 100/3")->capture_default_str();
    add_model_args(alloc, model);

    auto* sched = app.add_subcommand("schedule", "plan microbatch paths");
    sched->add_option("--topology", topology_file)->required();
    sched->add_option("--assignment", assignment_file);
    sched->add_option("--variant", variant, "SkipPipe, SkipPipeNoTc2, DtfmSkip or DtfmFull")->capture_default_str();
    sched->add_option("--skip", skip, "skip percent, e.g. 25 or 100/3")->capture_default_str();
    sched->add_option("--stages", stages, "stage count (DtfmFull only)")->capture_default_str();
    add_model_args(sched, model);

    auto* sim = app.add_subcommand("simulate", "execute a schedule");
    sim->add_option("--topology", topology_file)->required();
    sim->add_option("--schedule", schedule_file)->required();
    sim->add_option("--microbatches", microbatches, "total microbatches (default: one wave)");

    auto* cmp = app.add_subcommand("compare", "simulate several schedules on one topology");
    cmp->add_option("--topology", topology_file)->required();
    cmp->add_option("--schedule", entries, "name=schedule.json (repeatable)")->required();
    cmp->add_option("--microbatches", microbatches, "total microbatches (default: one wave)");

    auto* exp = app.add_subcommand("experiment", "batch experiment from --config");

    auto* gantt = app.add_subcommand("gantt", "render a traced report as SVG");
    gantt->add_option("--report", report_file)->required();

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*gen) return gen_topology(common, nodes);
        if (*alloc) return allocate_cmd(common, topology_file, stages, parse_percent(skip), model);
        if (*sched)
            return schedule_cmd(common, topology_file, assignment_file, variant, parse_percent(skip), stages, model);
        if (*sim) return simulate_cmd(common, topology_file, schedule_file, microbatches);
        if (*cmp) return compare_cmd(common, topology_file, entries, microbatches);
        if (*exp) return experiment_cmd(common);
        if (*gantt) return gantt_cmd(common, report_file);
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return kExitValidation;
}

#include "skippipe/serialization.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "skippipe/error.hpp"

namespace skippipe {

namespace {

json bound_to_json(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double bound_from_json(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw ValidationError("bad interval bound '" + s + "'");
    }
    return j.get<double>();
}

template <typename T>
void get_if_present(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

void to_json(json& j, const Topology& t) {
    j = json{{"n", t.n},
             {"latency_ms", t.latency_ms.rows()},
             {"bandwidth_bytes_per_ms", t.bandwidth_bytes_per_ms.rows()},
             {"compute_fwd_ms", t.compute_fwd_ms},
             {"bwd_ratio", t.bwd_ratio},
             {"mem_capacity", t.mem_capacity}};
}

void from_json(const json& j, Topology& t) {
    const int n = j.at("n").get<int>();
    const auto lat = SquareMatrix::from_rows(j.at("latency_ms").get<std::vector<std::vector<double>>>());
    SquareMatrix bw;
    if (j.contains("bandwidth_bytes_per_ms")) {
        bw = SquareMatrix::from_rows(j.at("bandwidth_bytes_per_ms").get<std::vector<std::vector<double>>>());
    } else if (j.contains("bandwidth_mb_per_s")) {
        auto rows = j.at("bandwidth_mb_per_s").get<std::vector<std::vector<double>>>();
        for (auto& row : rows)
            for (auto& v : row) v = mb_per_s_to_bytes_per_ms(v);
        bw = SquareMatrix::from_rows(rows);
    } else {
        throw ValidationError("topology needs bandwidth_bytes_per_ms or bandwidth_mb_per_s");
    }
    if (lat.size() != n || bw.size() != n) throw ValidationError("matrix size does not match n = " + std::to_string(n));
    auto compute = j.at("compute_fwd_ms").get<std::vector<double>>();
    t = make_topology(lat, bw, std::move(compute), j.value("bwd_ratio", 2.0), j.value("mem_capacity", 2));
}

void to_json(json& j, const Range& r) { j = json::array({r.lo, r.hi}); }
void from_json(const json& j, Range& r) {
    if (!j.is_array() || j.size() != 2) throw ValidationError("range must be [lo, hi]");
    r.lo = j[0].get<double>();
    r.hi = j[1].get<double>();
}

void to_json(json& j, const TopologyProfile& p) {
    j = json{{"nodes_per_region", p.nodes_per_region},
             {"intra_latency_ms", p.intra_latency_ms},
             {"inter_latency_ms", p.inter_latency_ms},
             {"intra_bandwidth_bytes_per_ms", p.intra_bandwidth_bytes_per_ms},
             {"inter_bandwidth_bytes_per_ms", p.inter_bandwidth_bytes_per_ms},
             {"compute_fwd_ms", p.compute_fwd_ms},
             {"bwd_ratio", p.bwd_ratio},
             {"mem_capacity", p.mem_capacity},
             {"seed", p.seed}};
}

void from_json(const json& j, TopologyProfile& p) {
    j.at("nodes_per_region").get_to(p.nodes_per_region);
    j.at("intra_latency_ms").get_to(p.intra_latency_ms);
    j.at("inter_latency_ms").get_to(p.inter_latency_ms);
    j.at("intra_bandwidth_bytes_per_ms").get_to(p.intra_bandwidth_bytes_per_ms);
    j.at("inter_bandwidth_bytes_per_ms").get_to(p.inter_bandwidth_bytes_per_ms);
    j.at("compute_fwd_ms").get_to(p.compute_fwd_ms);
    get_if_present(j, "bwd_ratio", p.bwd_ratio);
    get_if_present(j, "mem_capacity", p.mem_capacity);
    get_if_present(j, "seed", p.seed);
    validate(p);
}

void to_json(json& j, const ModelPreset& p) {
    j = json{{"name", p.name}, {"hidden_dim", p.hidden_dim}, {"n_layers", p.n_layers},
             {"context", p.context}, {"bytes_per_element", p.bytes_per_element}};
}

void from_json(const json& j, ModelPreset& p) {
    if (j.is_string()) {
        p = model_preset(j.get<std::string>());
        return;
    }
    if (j.contains("name") && !j.contains("hidden_dim")) {
        p = model_preset(j.at("name").get<std::string>());
    } else {
        j.at("name").get_to(p.name);
        j.at("hidden_dim").get_to(p.hidden_dim);
        j.at("n_layers").get_to(p.n_layers);
        j.at("context").get_to(p.context);
    }
    get_if_present(j, "bytes_per_element", p.bytes_per_element);
    validate(p);
}

void to_json(json& j, const GAConfig& c) {
    j = json{{"population", c.population}, {"generations", c.generations}, {"mutation_rate", c.mutation_rate},
             {"tournament", c.tournament}, {"seed", c.seed}};
}

void from_json(const json& j, GAConfig& c) {
    get_if_present(j, "population", c.population);
    get_if_present(j, "generations", c.generations);
    get_if_present(j, "mutation_rate", c.mutation_rate);
    get_if_present(j, "tournament", c.tournament);
    get_if_present(j, "seed", c.seed);
    validate(c);
}

void to_json(json& j, const StageAssignment& a) {
    j = json{{"s", a.s}, {"sizes", a.sizes}, {"members", a.members}, {"order", a.order}};
}

void from_json(const json& j, StageAssignment& a) {
    j.at("s").get_to(a.s);
    j.at("sizes").get_to(a.sizes);
    j.at("members").get_to(a.members);
    j.at("order").get_to(a.order);
}

void to_json(json& j, const SchedulerConfig& c) {
    j = json{{"k", c.k},
             {"msg_bytes", c.msg_bytes},
             {"pool_size", c.pool_size},
             {"slow_exempt_fraction", c.slow_exempt_fraction},
             {"delta_tie_ms", c.delta_tie},
             {"max_swaps", c.max_swaps},
             {"resolve_collisions", c.resolve_collisions},
             {"max_candidate_expansions", c.max_candidate_expansions},
             {"max_resolution_expansions", c.max_resolution_expansions}};
}

void from_json(const json& j, SchedulerConfig& c) {
    get_if_present(j, "k", c.k);
    get_if_present(j, "msg_bytes", c.msg_bytes);
    get_if_present(j, "pool_size", c.pool_size);
    get_if_present(j, "slow_exempt_fraction", c.slow_exempt_fraction);
    get_if_present(j, "delta_tie_ms", c.delta_tie);
    get_if_present(j, "max_swaps", c.max_swaps);
    get_if_present(j, "resolve_collisions", c.resolve_collisions);
    get_if_present(j, "max_candidate_expansions", c.max_candidate_expansions);
    get_if_present(j, "max_resolution_expansions", c.max_resolution_expansions);
}

void to_json(json& j, const IntervalConstraint& c) {
    j = json{{"agent", c.agent}, {"node", c.node}, {"t_start", bound_to_json(c.t_start)},
             {"t_end", bound_to_json(c.t_end)}};
}

void from_json(const json& j, IntervalConstraint& c) {
    j.at("agent").get_to(c.agent);
    j.at("node").get_to(c.node);
    c.t_start = bound_from_json(j.at("t_start"));
    c.t_end = bound_from_json(j.at("t_end"));
    if (!(c.t_start < c.t_end)) throw ValidationError("constraint interval must have t_start < t_end");
}

void to_json(json& j, const Visit& v) {
    j = json{{"node", v.node}, {"stage", v.stage}, {"arrival_ms", v.arrival}, {"start_ms", v.start}, {"end_ms", v.end}};
}

void from_json(const json& j, Visit& v) {
    j.at("node").get_to(v.node);
    j.at("stage").get_to(v.stage);
    j.at("arrival_ms").get_to(v.arrival);
    j.at("start_ms").get_to(v.start);
    j.at("end_ms").get_to(v.end);
}

void to_json(json& j, const PathPlan& p) {
    j = json{{"agent", p.agent},     {"origin", p.origin()}, {"visits", p.visits},
             {"backward", p.backward}, {"swap_count", p.swap_count}, {"e2e_ms", p.e2e}};
}

void from_json(const json& j, PathPlan& p) {
    j.at("agent").get_to(p.agent);
    j.at("visits").get_to(p.visits);
    get_if_present(j, "backward", p.backward);
    get_if_present(j, "swap_count", p.swap_count);
    j.at("e2e_ms").get_to(p.e2e);
    if (p.visits.size() < 2) throw ValidationError("path must start and end at its origin");
}

void to_json(json& j, const Schedule& s) {
    json agents = json::array();
    for (const auto& a : s.agents) agents.push_back(json{{"id", a.id}, {"origin", a.origin}});
    j = json{{"variant", to_string(s.kind)},
             {"config", s.config},
             {"assignment", s.assignment},
             {"agents", agents},
             {"paths", s.solution.paths},
             {"constraints", s.solution.constraints},
             {"cost_ms", s.solution.cost},
             {"resolved", s.resolved},
             {"candidates", s.candidates},
             {"expansions", s.expansions}};
}

void from_json(const json& j, Schedule& s) {
    s.kind = baseline_from_string(j.value("variant", std::string("SkipPipe")));
    get_if_present(j, "config", s.config);
    j.at("assignment").get_to(s.assignment);
    s.agents.clear();
    for (const auto& a : j.at("agents")) s.agents.push_back(Agent{a.at("id").get<int>(), a.at("origin").get<int>()});
    j.at("paths").get_to(s.solution.paths);
    get_if_present(j, "constraints", s.solution.constraints);
    j.at("cost_ms").get_to(s.solution.cost);
    get_if_present(j, "resolved", s.resolved);
    get_if_present(j, "candidates", s.candidates);
    get_if_present(j, "expansions", s.expansions);
    if (s.agents.size() != s.solution.paths.size()) throw ValidationError("schedule lists a different number of agents and paths");
}

void to_json(json& j, const SimReport& r) {
    json mbs = json::array();
    for (const auto& mb : r.microbatches)
        mbs.push_back(json{{"agent", mb.agent}, {"wave", mb.wave}, {"launch_ms", mb.launch},
                           {"completion_ms", mb.completion}, {"e2e_ms", mb.e2e()}});
    j = json{{"iteration_makespan_ms", r.makespan},
             {"microbatches", mbs},
             {"total_wait_ms", r.total_wait_ms},
             {"node_busy_ms", r.node_busy_ms},
             {"node_idle_ms", r.node_idle_ms},
             {"max_active", r.max_active},
             {"memory_overcommits", r.memory_overcommits}};
    if (r.has_trace) {
        json rows = json::array();
        for (const auto& e : r.trace)
            rows.push_back(json{{"time_ms", e.time}, {"node", e.node}, {"event", to_string(e.kind)},
                                {"agent", e.agent}, {"wave", e.wave}, {"direction", e.backward ? "bwd" : "fwd"}});
        j["trace"] = std::move(rows);
    }
}

std::vector<TraceEvent> trace_from_json(const json& report) {
    if (!report.contains("trace"))
        throw ValidationError("report has no trace; re-run `skippipe simulate` with --trace");
    std::vector<TraceEvent> out;
    for (const auto& row : report.at("trace")) {
        TraceEvent e;
        e.time = row.at("time_ms").get<double>();
        e.node = row.at("node").get<int>();
        const auto ev = row.at("event").get<std::string>();
        bool known = false;
        for (auto kind : {TraceKind::Launch, TraceKind::Arrive, TraceKind::Start, TraceKind::End, TraceKind::Complete})
            if (to_string(kind) == ev) {
                e.kind = kind;
                known = true;
            }
        if (!known) throw ValidationError("unknown trace event '" + ev + "'");
        e.agent = row.at("agent").get<int>();
        e.wave = row.at("wave").get<int>();
        e.backward = row.at("direction").get<std::string>() == "bwd";
        out.push_back(e);
    }
    return out;
}

std::string format_number(double value) {
    // nlohmann's dump is shortest round-trip and locale independent.
    return json(value).dump();
}

std::string trace_csv(const std::vector<TraceEvent>& trace) {
    std::ostringstream os;
    os << "time_ms,node,event,agent,wave,direction\n";
    for (const auto& e : trace)
        os << format_number(e.time) << ',' << e.node << ',' << to_string(e.kind) << ',' << e.agent << ',' << e.wave
           << ',' << (e.backward ? "bwd" : "fwd") << '\n';
    return os.str();
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void write_json(const std::filesystem::path& path, const json& value) { write_text(path, value.dump(2) + "\n"); }

}  // namespace skippipe

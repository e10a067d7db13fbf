#include "skippipe/simulator.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <tuple>

#include "skippipe/error.hpp"

namespace skippipe {

std::vector<Route> routes_of(const Schedule& schedule) {
    std::vector<Route> routes;
    for (const auto& path : schedule.solution.paths) routes.push_back(Route{path.agent, path.route()});
    return routes;
}

std::string to_string(TraceKind kind) {
    switch (kind) {
        case TraceKind::Launch: return "launch";
        case TraceKind::Arrive: return "arrive";
        case TraceKind::Start: return "start";
        case TraceKind::End: return "end";
        case TraceKind::Complete: return "complete";
    }
    return "?";
}

namespace {

struct Task {
    int mb = 0;     // index into microbatch table
    int hop = 0;    // position in the route
    bool backward = false;
    double arrival = 0.0;
};

struct Event {
    enum Kind { Arrival, ComputeEnd };
    double time;
    std::uint64_t seq;
    Kind kind;
    int node;
    Task task;

    bool operator>(const Event& o) const { return std::tie(time, seq) > std::tie(o.time, o.seq); }
};

struct NodeState {
    std::vector<Task> queue;
    bool busy = false;
    int active = 0;
};

class Simulation {
public:
    Simulation(std::span<const Route> routes, const Topology& topology, const SimConfig& config)
        : routes_(routes), topo_(topology), config_(config), nodes_(topology.n) {
        report_.node_busy_ms.assign(topology.n, 0.0);
        report_.has_trace = config.record_trace;
    }

    SimReport run() {
        const int agents = static_cast<int>(routes_.size());
        for (int a = 0; a < agents && a < config_.total_microbatches; ++a) launch(a, 0, 0.0);

        double now = 0.0;
        while (true) {
            if (events_.empty()) {
                if (!force_stalled_forward(now)) break;
                continue;
            }
            now = events_.top().time;
            while (!events_.empty() && events_.top().time == now) {
                const Event ev = events_.top();
                events_.pop();
                apply(ev);
            }
            dispatch(now);
        }

        for (const auto& mb : mbs_)
            if (mb.completion < 0.0) throw std::logic_error("simulation ended with an unfinished microbatch");
        report_.microbatches = mbs_;
        std::sort(report_.microbatches.begin(), report_.microbatches.end(),
                  [](const auto& x, const auto& y) { return std::tie(x.wave, x.agent) < std::tie(y.wave, y.agent); });
        for (const auto& mb : mbs_) report_.makespan = std::max(report_.makespan, mb.completion);
        for (double busy : report_.node_busy_ms) report_.node_idle_ms.push_back(report_.makespan - busy);
        return std::move(report_);
    }

private:
    const std::vector<int>& route_of(const Task& t) const { return routes_[mbs_[t.mb].agent].nodes; }

    void trace(double time, int node, TraceKind kind, const Task& t) {
        if (!config_.record_trace) return;
        report_.trace.push_back(TraceEvent{time, node, kind, mbs_[t.mb].agent, mbs_[t.mb].wave, t.backward});
    }

    void push(double time, Event::Kind kind, int node, const Task& task) {
        events_.push(Event{time, seq_++, kind, node, task});
    }

    void launch(int agent, int wave, double time) {
        mbs_.push_back(MicrobatchResult{agent, wave, time, -1.0});
        const Task task{static_cast<int>(mbs_.size()) - 1, 0, false, time};
        trace(time, routes_[agent].nodes.front(), TraceKind::Launch, task);
        push(time, Event::Arrival, routes_[agent].nodes.front(), task);
    }

    void apply(const Event& ev) {
        if (ev.kind == Event::Arrival) {
            Task task = ev.task;
            task.arrival = ev.time;
            trace(ev.time, ev.node, TraceKind::Arrive, task);
            nodes_[ev.node].queue.push_back(task);
            return;
        }
        NodeState& ns = nodes_[ev.node];
        ns.busy = false;
        const Task& t = ev.task;
        trace(ev.time, ev.node, TraceKind::End, t);
        const auto& route = route_of(t);
        const int last = static_cast<int>(route.size()) - 1;
        if (!t.backward) {
            if (t.hop < last) {
                const int next = route[t.hop + 1];
                push(ev.time + comm_time(topo_, ev.node, next, config_.msg_bytes), Event::Arrival, next,
                     Task{t.mb, t.hop + 1, false, 0.0});
            } else if (last == 0) {
                push(ev.time, Event::Arrival, ev.node, Task{t.mb, 0, true, 0.0});
            } else {
                // Loss at the origin, then gradients return to the last stage.
                const int origin = route.front();
                const double loss = ev.time + comm_time(topo_, ev.node, origin, config_.msg_bytes);
                push(loss + comm_time(topo_, origin, ev.node, config_.msg_bytes), Event::Arrival, ev.node,
                     Task{t.mb, last, true, 0.0});
            }
            return;
        }
        --ns.active;
        if (t.hop > 0) {
            const int prev = route[t.hop - 1];
            push(ev.time + comm_time(topo_, ev.node, prev, config_.msg_bytes), Event::Arrival, prev,
                 Task{t.mb, t.hop - 1, true, 0.0});
            return;
        }
        MicrobatchResult& mb = mbs_[t.mb];
        mb.completion = ev.time;
        trace(ev.time, ev.node, TraceKind::Complete, t);
        const int agents = static_cast<int>(routes_.size());
        const int next_wave = mb.wave + 1;
        if (next_wave * agents + mb.agent < config_.total_microbatches) launch(mb.agent, next_wave, ev.time);
    }

    static auto priority(const Task& t, const std::vector<MicrobatchResult>& mbs) {
        return std::tuple(t.backward ? 0 : 1, t.arrival, mbs[t.mb].wave, mbs[t.mb].agent);
    }

    void start(int node, size_t qi, double now) {
        NodeState& ns = nodes_[node];
        const Task task = ns.queue[qi];
        ns.queue.erase(ns.queue.begin() + static_cast<std::ptrdiff_t>(qi));
        ns.busy = true;
        const double dur = task.backward ? topo_.compute_bwd_ms(node) : topo_.compute_fwd_ms[node];
        if (!task.backward) {
            ++ns.active;
            report_.max_active = std::max(report_.max_active, ns.active);
        }
        report_.total_wait_ms += now - task.arrival;
        report_.node_busy_ms[node] += dur;
        trace(now, node, TraceKind::Start, task);
        push(now + dur, Event::ComputeEnd, node, task);
    }

    void dispatch(double now) {
        for (int node = 0; node < topo_.n; ++node) {
            NodeState& ns = nodes_[node];
            if (ns.busy || ns.queue.empty()) continue;
            std::optional<size_t> pick;
            for (size_t i = 0; i < ns.queue.size(); ++i) {
                const Task& t = ns.queue[i];
                if (!t.backward && ns.active >= topo_.mem_capacity) continue;
                if (!pick || priority(t, mbs_) < priority(ns.queue[*pick], mbs_)) pick = i;
            }
            if (pick) start(node, *pick, now);
        }
    }

    // Every pending task is a forward held back by a full node and nothing is
    // in flight: admit the oldest one past the cap.
    bool force_stalled_forward(double now) {
        std::optional<std::pair<int, size_t>> pick;
        for (int node = 0; node < topo_.n; ++node) {
            const NodeState& ns = nodes_[node];
            if (ns.busy) continue;
            for (size_t i = 0; i < ns.queue.size(); ++i)
                if (!pick || priority(ns.queue[i], mbs_) < priority(nodes_[pick->first].queue[pick->second], mbs_))
                    pick = std::pair(node, i);
        }
        if (!pick) return false;
        ++report_.memory_overcommits;
        start(pick->first, pick->second, now);
        return true;
    }

    std::span<const Route> routes_;
    const Topology& topo_;
    const SimConfig& config_;
    std::vector<NodeState> nodes_;
    std::vector<MicrobatchResult> mbs_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    std::uint64_t seq_ = 0;
    SimReport report_;
};

void validate_routes(std::span<const Route> routes, const Topology& topology) {
    if (routes.empty()) throw ValidationError("no routes to simulate");
    for (size_t a = 0; a < routes.size(); ++a) {
        const auto& r = routes[a];
        if (r.agent != static_cast<int>(a)) throw ValidationError("route agent ids must be dense from 0");
        if (r.nodes.empty()) throw ValidationError("route of agent " + std::to_string(a) + " is empty");
        std::vector<int> sorted = r.nodes;
        for (int node : r.nodes)
            if (node < 0 || node >= topology.n)
                throw ValidationError("route references unknown node", static_cast<int>(a), node);
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw ValidationError("route of agent " + std::to_string(a) + " repeats a node");
    }
}

}  // namespace

SimReport simulate(std::span<const Route> routes, const Topology& topology, const SimConfig& config) {
    validate(topology);
    validate_routes(routes, topology);
    if (config.total_microbatches < 1) throw ValidationError("total_microbatches must be positive");
    if (!(config.msg_bytes > 0.0)) throw ValidationError("simulation msg_bytes must be positive");
    return Simulation(routes, topology, config).run();
}

SimReport simulate(const Schedule& schedule, const Topology& topology, const SimConfig& config) {
    const auto routes = routes_of(schedule);
    return simulate(routes, topology, config);
}

Comparison compare(const std::map<std::string, Schedule>& schedules, const Topology& topology,
                   const SimConfig& config) {
    Comparison out;
    for (const auto& [name, sched] : schedules) out.rows.push_back(ComparisonRow{name, simulate(sched, topology, config)});
    if (out.rows.empty()) return out;
    const double first = out.rows.front().report.makespan;
    for (auto& row : out.rows) row.speedup_vs_first = first / row.report.makespan;
    for (const auto& a : out.rows) {
        std::vector<double> line;
        for (const auto& b : out.rows) line.push_back(a.report.makespan / b.report.makespan);
        out.pairwise_speedup.push_back(std::move(line));
    }
    return out;
}

}  // namespace skippipe

#include "skippipe/gantt.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

#include "skippipe/error.hpp"
#include "skippipe/serialization.hpp"

namespace skippipe {

namespace {

constexpr double kLeft = 80.0;
constexpr double kTop = 30.0;
constexpr double kPlotWidth = 1100.0;
constexpr double kRowHeight = 28.0;
constexpr double kAxisHeight = 40.0;

double nice_step(double span) {
    if (span <= 0.0) return 1.0;
    const double raw = span / 10.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag) return m * mag;
    return 10.0 * mag;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

struct Bar {
    int node;
    int agent;
    int wave;
    bool backward;
    double start;
    double end;
};

}  // namespace

std::string emit_gantt(const std::vector<TraceEvent>& trace, int n_nodes) {
    std::map<std::tuple<int, int, int, bool>, double> open;
    std::vector<Bar> bars;
    double horizon = 0.0;
    for (const auto& e : trace) {
        horizon = std::max(horizon, e.time);
        const auto key = std::tuple(e.node, e.agent, e.wave, e.backward);
        if (e.kind == TraceKind::Start) {
            open[key] = e.time;
        } else if (e.kind == TraceKind::End) {
            auto it = open.find(key);
            if (it == open.end()) throw ValidationError("trace has an end event without a start");
            bars.push_back(Bar{e.node, e.agent, e.wave, e.backward, it->second, e.time});
            open.erase(it);
        }
    }
    std::sort(bars.begin(), bars.end(),
              [](const Bar& a, const Bar& b) { return std::tie(a.start, a.node, a.agent) < std::tie(b.start, b.node, b.agent); });

    const double span = horizon > 0.0 ? horizon : 1.0;
    const double scale = kPlotWidth / span;
    const double height = kTop + n_nodes * kRowHeight + kAxisHeight;
    const double width = kLeft + kPlotWidth + 20.0;

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\"" << fmt(height)
        << "\" viewBox=\"0 0 " << fmt(width) << ' ' << fmt(height) << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << fmt(width) << "\" height=\"" << fmt(height) << "\" fill=\"white\"/>\n";

    for (int node = 0; node < n_nodes; ++node) {
        const double y = kTop + node * kRowHeight;
        svg << "<g class=\"node-row\"><rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(y) << "\" width=\""
            << fmt(kPlotWidth) << "\" height=\"" << fmt(kRowHeight) << "\" fill=\"" << (node % 2 ? "#f4f4f4" : "#fafafa")
            << "\"/><text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(y + kRowHeight * 0.65)
            << "\" text-anchor=\"end\">node " << node << "</text></g>\n";
    }

    const double axis_y = kTop + n_nodes * kRowHeight;
    svg << "<line class=\"axis\" x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(axis_y) << "\" x2=\"" << fmt(kLeft + kPlotWidth)
        << "\" y2=\"" << fmt(axis_y) << "\" stroke=\"black\"/>\n";
    const double step = nice_step(span);
    for (double t = 0.0; t <= span + 1e-9; t += step) {
        const double x = kLeft + t * scale;
        svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(axis_y) << "\" x2=\"" << fmt(x) << "\" y2=\""
            << fmt(axis_y + 5) << "\" stroke=\"black\"/><text x=\"" << fmt(x) << "\" y=\"" << fmt(axis_y + 17)
            << "\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
    }
    svg << "<text x=\"" << fmt(kLeft + kPlotWidth / 2) << "\" y=\"" << fmt(axis_y + 33)
        << "\" text-anchor=\"middle\">time (ms)</text>\n";

    for (const auto& b : bars) {
        const double hue = std::fmod(b.agent * 137.508, 360.0);
        const double y = kTop + b.node * kRowHeight + 3.0;
        const double x = kLeft + b.start * scale;
        const double w = std::max(0.5, (b.end - b.start) * scale);
        const char dir = b.backward ? 'B' : 'F';
        svg << "<g><rect class=\"compute " << (b.backward ? "bwd" : "fwd") << "\" x=\"" << fmt(x) << "\" y=\"" << fmt(y)
            << "\" width=\"" << fmt(w) << "\" height=\"" << fmt(kRowHeight - 6.0) << "\" fill=\"hsl(" << fmt(hue)
            << ",65%," << (b.backward ? "75%" : "50%") << ")\" stroke=\"#333\" stroke-width=\"0.5\""
            << (b.wave % 2 ? " stroke-dasharray=\"3,2\"" : "") << "><title>agent " << b.agent << " wave " << b.wave
            << ' ' << (b.backward ? "backward" : "forward") << ' ' << fmt(b.start) << "-" << fmt(b.end)
            << " ms</title></rect>";
        if (w > 30.0)
            svg << "<text x=\"" << fmt(x + 2) << "\" y=\"" << fmt(y + kRowHeight * 0.5) << "\">a" << b.agent << " w"
                << b.wave << ' ' << dir << "</text>";
        svg << "</g>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string emit_gantt(const SimReport& report) {
    if (!report.has_trace)
        throw ValidationError("report was recorded without a trace; re-run `skippipe simulate` with --trace");
    return emit_gantt(report.trace, static_cast<int>(report.node_busy_ms.size()));
}

}  // namespace skippipe

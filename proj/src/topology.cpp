#include "skippipe/topology.hpp"

#include <algorithm>
#include <cmath>

#include "skippipe/error.hpp"
#include "skippipe/random.hpp"

namespace skippipe {

SquareMatrix::SquareMatrix(int n, std::vector<double> data) : n_(n), data_(std::move(data)) {
    if (n < 0 || data_.size() != static_cast<size_t>(n) * n)
        throw ValidationError("matrix data does not hold n*n entries");
}

SquareMatrix SquareMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    const int n = static_cast<int>(rows.size());
    SquareMatrix m(n);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rows[i].size()) != n)
            throw ValidationError("matrix is not square: row " + std::to_string(i) + " has " +
                                  std::to_string(rows[i].size()) + " entries, expected " +
                                  std::to_string(n));
        for (int j = 0; j < n; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

std::vector<std::vector<double>> SquareMatrix::rows() const {
    std::vector<std::vector<double>> out(n_, std::vector<double>(n_));
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) out[i][j] = (*this)(i, j);
    return out;
}

namespace {

void check_positive_off_diagonal(const SquareMatrix& m, const char* name) {
    for (int i = 0; i < m.size(); ++i)
        for (int j = 0; j < m.size(); ++j) {
            if (i == j) continue;
            const double v = m(i, j);
            if (!(v > 0.0) || std::isnan(v))
                throw ValidationError(std::string(name) + " must be strictly positive off the diagonal", i, j);
        }
}

void check_range(const Range& r, const char* name) {
    if (!(r.lo > 0.0) || !(r.hi >= r.lo))
        throw ValidationError(std::string(name) + " range must satisfy 0 < lo <= hi");
}

}  // namespace

std::pair<SquareMatrix, SquareMatrix> symmetrize(const SquareMatrix& raw_latency,
                                                  const SquareMatrix& raw_bandwidth) {
    if (raw_latency.size() != raw_bandwidth.size())
        throw ValidationError("latency and bandwidth matrices differ in size");
    check_positive_off_diagonal(raw_latency, "latency");
    check_positive_off_diagonal(raw_bandwidth, "bandwidth");

    const int n = raw_latency.size();
    SquareMatrix lat(n), bw(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            lat(i, j) = (raw_latency(i, j) + raw_latency(j, i)) / 2.0;
            bw(i, j) = (raw_bandwidth(i, j) + raw_bandwidth(j, i)) / 2.0;
        }
    return {std::move(lat), std::move(bw)};
}

Topology make_topology(const SquareMatrix& raw_latency, const SquareMatrix& raw_bandwidth,
                       std::vector<double> compute_fwd_ms, double bwd_ratio, int mem_capacity) {
    auto [lat, bw] = symmetrize(raw_latency, raw_bandwidth);
    Topology t;
    t.n = lat.size();
    t.latency_ms = std::move(lat);
    t.bandwidth_bytes_per_ms = std::move(bw);
    t.compute_fwd_ms = std::move(compute_fwd_ms);
    t.bwd_ratio = bwd_ratio;
    t.mem_capacity = mem_capacity;
    validate(t);
    return t;
}

void validate(const Topology& t) {
    if (t.n < 1) throw ValidationError("topology needs at least one node");
    if (t.latency_ms.size() != t.n || t.bandwidth_bytes_per_ms.size() != t.n)
        throw ValidationError("matrix size does not match n = " + std::to_string(t.n));
    check_positive_off_diagonal(t.latency_ms, "latency");
    check_positive_off_diagonal(t.bandwidth_bytes_per_ms, "bandwidth");
    for (int i = 0; i < t.n; ++i)
        for (int j = i + 1; j < t.n; ++j) {
            if (t.latency_ms(i, j) != t.latency_ms(j, i))
                throw ValidationError("latency is not symmetric", i, j);
            if (t.bandwidth_bytes_per_ms(i, j) != t.bandwidth_bytes_per_ms(j, i))
                throw ValidationError("bandwidth is not symmetric", i, j);
        }
    if (static_cast<int>(t.compute_fwd_ms.size()) != t.n)
        throw ValidationError("compute_fwd_ms must have one entry per node");
    for (int i = 0; i < t.n; ++i)
        if (!(t.compute_fwd_ms[i] > 0.0))
            throw ValidationError("compute_fwd_ms[" + std::to_string(i) + "] must be positive");
    if (!(t.bwd_ratio > 0.0)) throw ValidationError("bwd_ratio must be positive");
    if (t.mem_capacity < 1) throw ValidationError("mem_capacity must be at least 1");
}

double comm_time(const Topology& t, int i, int j, double msg_bytes) {
    if (i < 0 || i >= t.n || j < 0 || j >= t.n)
        throw ValidationError("node id out of range", i, j);
    if (i == j) throw ValidationError("comm_time of a node with itself", i, j);
    if (!(msg_bytes > 0.0)) throw ValidationError("message size must be positive");
    return t.latency_ms(i, j) + msg_bytes / t.bandwidth_bytes_per_ms(i, j);
}

Topology induced_subtopology(const Topology& t, std::span<const int> nodes) {
    const int n = static_cast<int>(nodes.size());
    Topology sub;
    sub.n = n;
    sub.latency_ms = SquareMatrix(n);
    sub.bandwidth_bytes_per_ms = SquareMatrix(n);
    sub.bwd_ratio = t.bwd_ratio;
    sub.mem_capacity = t.mem_capacity;
    for (int a = 0; a < n; ++a) {
        if (nodes[a] < 0 || nodes[a] >= t.n) throw ValidationError("node id out of range", a, nodes[a]);
        sub.compute_fwd_ms.push_back(t.compute_fwd_ms[nodes[a]]);
        for (int b = 0; b < n; ++b) {
            sub.latency_ms(a, b) = t.latency_ms(nodes[a], nodes[b]);
            sub.bandwidth_bytes_per_ms(a, b) = t.bandwidth_bytes_per_ms(nodes[a], nodes[b]);
        }
    }
    validate(sub);
    return sub;
}

int TopologyProfile::node_count() const {
    int total = 0;
    for (int c : nodes_per_region) total += c;
    return total;
}

void validate(const TopologyProfile& p) {
    if (p.nodes_per_region.empty()) throw ValidationError("profile has no regions");
    for (size_t r = 0; r < p.nodes_per_region.size(); ++r)
        if (p.nodes_per_region[r] < 1)
            throw ValidationError("region " + std::to_string(r) + " is empty");
    check_range(p.intra_latency_ms, "intra_latency_ms");
    check_range(p.inter_latency_ms, "inter_latency_ms");
    check_range(p.intra_bandwidth_bytes_per_ms, "intra_bandwidth_bytes_per_ms");
    check_range(p.inter_bandwidth_bytes_per_ms, "inter_bandwidth_bytes_per_ms");
    check_range(p.compute_fwd_ms, "compute_fwd_ms");
    if (!(p.bwd_ratio > 0.0)) throw ValidationError("bwd_ratio must be positive");
    if (p.mem_capacity < 1) throw ValidationError("mem_capacity must be at least 1");
}

std::vector<int> region_of_nodes(const TopologyProfile& p) {
    std::vector<int> region;
    for (int r = 0; r < p.region_count(); ++r) region.insert(region.end(), p.nodes_per_region[r], r);
    return region;
}

Topology sample_topology(const TopologyProfile& p) {
    validate(p);
    const int n = p.node_count();
    const std::vector<int> region = region_of_nodes(p);
    Rng rng(p.seed);

    SquareMatrix lat(n), bw(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const bool intra = region[i] == region[j];
            const Range& lr = intra ? p.intra_latency_ms : p.inter_latency_ms;
            const Range& br = intra ? p.intra_bandwidth_bytes_per_ms : p.inter_bandwidth_bytes_per_ms;
            lat(i, j) = rng.uniform(lr.lo, lr.hi);
            bw(i, j) = rng.uniform(br.lo, br.hi);
        }
    std::vector<double> compute(n);
    for (int i = 0; i < n; ++i) compute[i] = rng.uniform(p.compute_fwd_ms.lo, p.compute_fwd_ms.hi);
    return make_topology(lat, bw, std::move(compute), p.bwd_ratio, p.mem_capacity);
}

int ModelPreset::layers_per_stage(int stages) const {
    if (stages < 1 || n_layers % stages != 0)
        throw ValidationError(name + ": " + std::to_string(n_layers) + " layers do not divide into " +
                              std::to_string(stages) + " stages");
    return n_layers / stages;
}

ModelPreset model_preset(const std::string& name) {
    // Dim, layers, context of the LLaMa configurations used for the throughput runs.
    if (name == "llama-50m") return {name, 288, 12, 256, 2};
    if (name == "llama-500m") return {name, 1024, 24, 1024, 2};
    if (name == "llama-1.5b") return {name, 2048, 24, 4096, 2};
    if (name == "llama2-7b") return {name, 4096, 32, 4096, 2};
    if (name == "llama3-8b") return {name, 4096, 32, 4096, 2};
    throw ValidationError("unknown model preset '" + name + "'");
}

std::vector<std::string> model_preset_names() {
    return {"llama-50m", "llama-500m", "llama-1.5b", "llama2-7b", "llama3-8b"};
}

void validate(const ModelPreset& p) {
    if (p.hidden_dim < 1 || p.n_layers < 1 || p.context < 1 || p.bytes_per_element < 1)
        throw ValidationError("model preset '" + p.name + "' has a non-positive field");
}

double activation_bytes(const ModelPreset& p, int samples_per_microbatch) {
    validate(p);
    if (samples_per_microbatch < 1) throw ValidationError("samples_per_microbatch must be positive");
    return static_cast<double>(p.hidden_dim) * p.context * samples_per_microbatch * p.bytes_per_element;
}

double stage_parameter_bytes(const ModelPreset& p, int stages) {
    validate(p);
    const double per_layer = 12.0 * p.hidden_dim * p.hidden_dim;
    return per_layer * p.layers_per_stage(stages) * p.bytes_per_element;
}

}  // namespace skippipe

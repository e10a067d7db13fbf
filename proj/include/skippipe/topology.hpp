#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace skippipe {

/// Dense row-major n x n matrix of doubles.
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(int n, double fill = 0.0) : n_(n), data_(static_cast<size_t>(n) * n, fill) {}
    SquareMatrix(int n, std::vector<double> data);
    static SquareMatrix from_rows(const std::vector<std::vector<double>>& rows);

    int size() const { return n_; }
    double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * n_ + j]; }
    double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * n_ + j]; }
    std::vector<std::vector<double>> rows() const;

    bool operator==(const SquareMatrix&) const = default;

private:
    int n_ = 0;
    std::vector<double> data_;
};

/// Heterogeneous network of training nodes.
///
/// Latency is in milliseconds, bandwidth in bytes per millisecond. Both
/// matrices are symmetric once a Topology has been built through
/// make_topology(); the diagonal is never read.
struct Topology {
    int n = 0;
    SquareMatrix latency_ms;
    SquareMatrix bandwidth_bytes_per_ms;
    std::vector<double> compute_fwd_ms;
    double bwd_ratio = 2.0;
    int mem_capacity = 2;

    double compute_bwd_ms(int node) const { return compute_fwd_ms[node] * bwd_ratio; }
};

/// Averages both directions of each link: x'(i,j) = (x(i,j) + x(j,i)) / 2.
std::pair<SquareMatrix, SquareMatrix> symmetrize(const SquareMatrix& raw_latency,
                                                  const SquareMatrix& raw_bandwidth);

/// Validates the raw inputs and returns a symmetrized topology.
Topology make_topology(const SquareMatrix& raw_latency, const SquareMatrix& raw_bandwidth,
                       std::vector<double> compute_fwd_ms, double bwd_ratio = 2.0,
                       int mem_capacity = 2);

/// Throws ValidationError if any Topology invariant is broken.
void validate(const Topology& topology);

/// latency + bytes / bandwidth on the symmetrized link i <-> j.
double comm_time(const Topology& topology, int i, int j, double msg_bytes);

/// Topology restricted to `nodes`, renumbered 0..nodes.size()-1 in the given order.
Topology induced_subtopology(const Topology& topology, std::span<const int> nodes);

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

/// Generator description for synthetic geo-distributed clusters: nodes are
/// grouped into regions with fast links inside a region and slow links
/// between regions.
struct TopologyProfile {
    std::vector<int> nodes_per_region;
    Range intra_latency_ms;
    Range inter_latency_ms;
    Range intra_bandwidth_bytes_per_ms;
    Range inter_bandwidth_bytes_per_ms;
    Range compute_fwd_ms;
    double bwd_ratio = 2.0;
    int mem_capacity = 2;
    std::uint64_t seed = 0;

    int node_count() const;
    int region_count() const { return static_cast<int>(nodes_per_region.size()); }
};

void validate(const TopologyProfile& profile);

/// Region index of every node, in node order.
std::vector<int> region_of_nodes(const TopologyProfile& profile);

/// Deterministic in the profile (seed included). Each direction of every
/// link is drawn independently, then the pair is symmetrized.
Topology sample_topology(const TopologyProfile& profile);

struct ModelPreset {
    std::string name;
    int hidden_dim = 0;
    int n_layers = 0;
    int context = 0;
    int bytes_per_element = 2;

    int layers_per_stage(int stages) const;
};

/// Built-in LLaMa-style presets: llama-50m, llama-500m, llama-1.5b, llama2-7b, llama3-8b.
ModelPreset model_preset(const std::string& name);
std::vector<std::string> model_preset_names();

void validate(const ModelPreset& preset);

/// Activation message for one microbatch between two stages:
/// hidden_dim * context * samples * bytes_per_element.
double activation_bytes(const ModelPreset& preset, int samples_per_microbatch);

/// Parameter bytes held by one stage, used as the data-parallel sync message.
/// A transformer block has roughly 12 * hidden^2 parameters.
double stage_parameter_bytes(const ModelPreset& preset, int stages);

/// Canonical unit conversion for loaders: MB/s -> bytes/ms.
constexpr double mb_per_s_to_bytes_per_ms(double mb_per_s) { return mb_per_s * 1000.0; }

}  // namespace skippipe

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "skippipe/topology.hpp"

namespace skippipe {

/// Per-stage node counts for n_nodes split over s stages with k% skipping.
///
/// Every non-first stage gets |S0| * (1 - s/(s-1) * k/100) nodes, so that a
/// microbatch visiting (100-k)% of the stages loads all non-first stages
/// equally. Throws ValidationError when no integral solution exists; the
/// message lists the nearest node counts that do have one.
std::vector<int> stage_sizes(int n_nodes, int s, double k);

/// Number of stages each microbatch visits, S0 included: s * (100-k) / 100.
int visited_stage_count(int s, double k);

struct GAConfig {
    int population = 64;
    int generations = 500;
    double mutation_rate = 0.3;
    int tournament = 4;
    std::uint64_t seed = 1;
};

void validate(const GAConfig& config);

struct Clustering {
    std::vector<std::vector<int>> members;  // cluster -> sorted node ids
    double fitness = 0.0;
    std::vector<double> best_fitness_per_generation;
};

/// Worst intra-cluster link: max over clusters of the slowest pairwise
/// comm_time for a data-parallel sync of `dp_msg_bytes`.
double partition_fitness(const Topology& topology, const std::vector<std::vector<int>>& members,
                         double dp_msg_bytes);

/// Size-constrained genetic partitioning. A genome is a permutation of the
/// nodes; cluster c owns the slice of positions assigned to it by `sizes`.
/// Tournament selection, swap mutation across clusters, elitism of one.
///
/// The result is canonical: members sorted, clusters ordered by size
/// (descending) then smallest member, so cluster 0 is the designated S0.
Clustering cluster_nodes(const Topology& topology, std::span<const int> sizes, double dp_msg_bytes,
                         const GAConfig& config);

/// Nodes grouped into stages and the pipeline order of those stages.
///
/// `members[c]` lists the nodes of cluster c. `order[p]` is the cluster that
/// runs pipeline position p; order[0] is S0.
struct StageAssignment {
    int s = 0;
    std::vector<int> sizes;
    std::vector<std::vector<int>> members;
    std::vector<int> order;

    /// Node lists indexed by pipeline position.
    std::vector<std::vector<int>> pipeline() const;
};

void validate(const StageAssignment& assignment, int n_nodes);

/// Mean comm_time over all cross pairs of two clusters.
double cluster_link_cost(const Topology& topology, std::span<const int> a, std::span<const int> b,
                         double msg_bytes);

/// Closed tour cost of visiting clusters in `order` and returning to order[0].
double tour_cost(const Topology& topology, const std::vector<std::vector<int>>& members,
                 std::span<const int> order, double msg_bytes);

constexpr int kMaxExactTspStages = 12;

/// Exact closed-loop TSP over clusters (Held-Karp). The tour starts at S0,
/// the unique largest cluster (cluster 0 when several tie). Among optimal
/// tours the lexicographically smallest is returned.
StageAssignment order_stages(const Topology& topology, const std::vector<std::vector<int>>& members,
                             double msg_bytes);

struct AllocationOptions {
    GAConfig ga;
    double dp_msg_bytes = 0.0;   // parameter bytes of one stage
    double activation_bytes = 0.0;
};

/// stage_sizes -> cluster_nodes -> order_stages.
StageAssignment allocate(const Topology& topology, int s, double k, const AllocationOptions& options);

}  // namespace skippipe

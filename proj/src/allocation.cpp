#include "skippipe/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "skippipe/error.hpp"
#include "skippipe/random.hpp"

namespace skippipe {

namespace {

constexpr double kIntegralTol = 1e-9;

bool near_integer(double x) { return std::abs(x - std::round(x)) < kIntegralTol; }

// Returns the sizes for (n, s, k) or an empty vector when Eq. 1 has no integral solution.
std::vector<int> try_stage_sizes(int n, int s, double k) {
    const double first = n * 100.0 / (s * (100.0 - k));
    const double ratio = 1.0 - (static_cast<double>(s) / (s - 1)) * (k / 100.0);
    const double other = first * ratio;
    if (!near_integer(first) || !near_integer(other)) return {};
    const int f = static_cast<int>(std::lround(first));
    const int o = static_cast<int>(std::lround(other));
    if (f < 1 || o < 1 || f + (s - 1) * o != n) return {};
    std::vector<int> sizes(s, o);
    sizes[0] = f;
    return sizes;
}

}  // namespace

std::vector<int> stage_sizes(int n_nodes, int s, double k) {
    if (s < 2) throw ValidationError("need at least 2 stages, got " + std::to_string(s));
    if (n_nodes < s) throw ValidationError("fewer nodes than stages");
    const double k_max = 100.0 * (s - 1) / s;
    if (!(k >= 0.0) || !(k < k_max)) {
        std::ostringstream os;
        os << "skip percent " << k << " outside [0, " << k_max << ") for " << s << " stages";
        throw ValidationError(os.str());
    }
    const double ratio = 1.0 - (static_cast<double>(s) / (s - 1)) * (k / 100.0);
    if (ratio * n_nodes * 100.0 / (s * (100.0 - k)) < 1.0 - kIntegralTol)
        throw ValidationError("skip percent too large: non-first stages would get fewer than one node");

    auto sizes = try_stage_sizes(n_nodes, s, k);
    if (!sizes.empty()) return sizes;

    std::vector<int> nearest;
    for (int d = 1; d <= 10 * n_nodes && nearest.empty(); ++d) {
        if (n_nodes - d >= s && !try_stage_sizes(n_nodes - d, s, k).empty()) nearest.push_back(n_nodes - d);
        if (!try_stage_sizes(n_nodes + d, s, k).empty()) nearest.push_back(n_nodes + d);
    }
    std::ostringstream os;
    os << "no integral stage sizes for " << n_nodes << " nodes, " << s << " stages, " << k
       << "% skip; nearest feasible node counts:";
    for (int c : nearest) os << ' ' << c;
    if (nearest.empty()) os << " none";
    throw ValidationError(os.str());
}

int visited_stage_count(int s, double k) {
    const double l = s * (100.0 - k) / 100.0;
    if (!near_integer(l) || std::lround(l) < 1) {
        std::ostringstream os;
        os << "skipping " << k << "% of " << s << " stages does not leave a whole number of stages";
        throw ValidationError(os.str());
    }
    return static_cast<int>(std::lround(l));
}

void validate(const GAConfig& c) {
    if (c.population < 1 || c.generations < 1 || c.tournament < 1)
        throw ValidationError("GA population, generations and tournament must be positive");
    if (!(c.mutation_rate > 0.0 && c.mutation_rate <= 1.0))
        throw ValidationError("GA mutation_rate must be in (0, 1]");
}

double partition_fitness(const Topology& topology, const std::vector<std::vector<int>>& members,
                         double dp_msg_bytes) {
    double worst = 0.0;
    for (const auto& cluster : members)
        for (size_t a = 0; a < cluster.size(); ++a)
            for (size_t b = a + 1; b < cluster.size(); ++b)
                worst = std::max(worst, comm_time(topology, cluster[a], cluster[b], dp_msg_bytes));
    return worst;
}

namespace {

struct Score {
    double worst = 0.0;  // reported fitness
    double total = 0.0;  // sum of per-cluster worst links; breaks plateaus in `worst`

    bool operator<(const Score& o) const {
        if (worst != o.worst) return worst < o.worst;
        return total < o.total;
    }
};

class PartitionEvaluator {
public:
    PartitionEvaluator(const Topology& t, std::span<const int> sizes, double bytes)
        : n_(t.n), cost_(t.n), cluster_of_pos_(t.n) {
        for (int i = 0; i < t.n; ++i)
            for (int j = 0; j < t.n; ++j)
                if (i != j) cost_(i, j) = comm_time(t, i, j, bytes);
        int pos = 0;
        for (size_t c = 0; c < sizes.size(); ++c) {
            offsets_.push_back(pos);
            for (int r = 0; r < sizes[c]; ++r) cluster_of_pos_[pos++] = static_cast<int>(c);
        }
        offsets_.push_back(pos);
    }

    Score operator()(const std::vector<int>& genome) const {
        Score s;
        for (size_t c = 0; c + 1 < offsets_.size(); ++c) {
            double cw = 0.0;
            for (int a = offsets_[c]; a < offsets_[c + 1]; ++a)
                for (int b = a + 1; b < offsets_[c + 1]; ++b) cw = std::max(cw, cost_(genome[a], genome[b]));
            s.worst = std::max(s.worst, cw);
            s.total += cw;
        }
        return s;
    }

    int cluster_of_position(int pos) const { return cluster_of_pos_[pos]; }
    int clusters() const { return static_cast<int>(offsets_.size()) - 1; }

    std::vector<std::vector<int>> decode(const std::vector<int>& genome) const {
        std::vector<std::vector<int>> members(clusters());
        for (int c = 0; c < clusters(); ++c) {
            members[c].assign(genome.begin() + offsets_[c], genome.begin() + offsets_[c + 1]);
            std::sort(members[c].begin(), members[c].end());
        }
        return members;
    }

    int n() const { return n_; }

private:
    int n_;
    SquareMatrix cost_;
    std::vector<int> cluster_of_pos_;
    std::vector<int> offsets_;
};

void mutate(std::vector<int>& genome, const PartitionEvaluator& eval, Rng& rng) {
    const int n = eval.n();
    if (eval.clusters() < 2) return;
    const int a = static_cast<int>(rng.below(n));
    int b = static_cast<int>(rng.below(n - 1));
    if (b >= a) ++b;
    if (eval.cluster_of_position(a) == eval.cluster_of_position(b)) {
        // Walk to the next position in a different cluster.
        for (int step = 1; step < n; ++step) {
            const int c = (b + step) % n;
            if (eval.cluster_of_position(c) != eval.cluster_of_position(a)) {
                b = c;
                break;
            }
        }
    }
    std::swap(genome[a], genome[b]);
}

}  // namespace

Clustering cluster_nodes(const Topology& topology, std::span<const int> sizes, double dp_msg_bytes,
                         const GAConfig& config) {
    validate(topology);
    validate(config);
    if (sizes.empty()) throw ValidationError("no cluster sizes given");
    int total = 0;
    for (int sz : sizes) {
        if (sz < 1) throw ValidationError("cluster sizes must be positive");
        total += sz;
    }
    if (total != topology.n)
        throw ValidationError("cluster sizes sum to " + std::to_string(total) + " but topology has " +
                              std::to_string(topology.n) + " nodes");
    if (!(dp_msg_bytes > 0.0)) throw ValidationError("DP message size must be positive");

    const PartitionEvaluator eval(topology, sizes, dp_msg_bytes);
    Rng rng(config.seed);

    std::vector<std::vector<int>> population(config.population);
    std::vector<int> identity(topology.n);
    std::iota(identity.begin(), identity.end(), 0);
    for (int i = 0; i < config.population; ++i) {
        population[i] = identity;
        if (i == 0) continue;
        for (int j = topology.n - 1; j > 0; --j) std::swap(population[i][j], population[i][rng.below(j + 1)]);
    }
    std::vector<Score> scores(config.population);
    for (int i = 0; i < config.population; ++i) scores[i] = eval(population[i]);

    auto best_index = [&] {
        int best = 0;
        for (int i = 1; i < config.population; ++i)
            if (scores[i] < scores[best]) best = i;
        return best;
    };

    Clustering out;
    out.best_fitness_per_generation.reserve(config.generations);
    for (int gen = 0; gen < config.generations; ++gen) {
        const int elite = best_index();
        std::vector<std::vector<int>> next;
        next.reserve(config.population);
        next.push_back(population[elite]);
        while (static_cast<int>(next.size()) < config.population) {
            int winner = static_cast<int>(rng.below(config.population));
            for (int t = 1; t < config.tournament; ++t) {
                const int challenger = static_cast<int>(rng.below(config.population));
                if (scores[challenger] < scores[winner] ||
                    (!(scores[winner] < scores[challenger]) && challenger < winner))
                    winner = challenger;
            }
            std::vector<int> child = population[winner];
            if (rng.uniform01() < config.mutation_rate) {
                do {
                    mutate(child, eval, rng);
                } while (rng.uniform01() < config.mutation_rate);
            }
            next.push_back(std::move(child));
        }
        population = std::move(next);
        for (int i = 0; i < config.population; ++i) scores[i] = eval(population[i]);
        out.best_fitness_per_generation.push_back(scores[best_index()].worst);
    }

    out.members = eval.decode(population[best_index()]);
    std::stable_sort(out.members.begin(), out.members.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a.front() < b.front();
    });
    out.fitness = partition_fitness(topology, out.members, dp_msg_bytes);
    return out;
}

std::vector<std::vector<int>> StageAssignment::pipeline() const {
    std::vector<std::vector<int>> stages;
    stages.reserve(order.size());
    for (int c : order) stages.push_back(members[c]);
    return stages;
}

void validate(const StageAssignment& a, int n_nodes) {
    if (a.s < 1 || static_cast<int>(a.members.size()) != a.s || static_cast<int>(a.order.size()) != a.s ||
        static_cast<int>(a.sizes.size()) != a.s)
        throw ValidationError("stage assignment must list s clusters, sizes and order entries");
    std::vector<int> seen(n_nodes, 0);
    for (int c = 0; c < a.s; ++c) {
        if (static_cast<int>(a.members[c].size()) != a.sizes[c] || a.members[c].empty())
            throw ValidationError("cluster " + std::to_string(c) + " size does not match sizes[]");
        for (int node : a.members[c]) {
            if (node < 0 || node >= n_nodes) throw ValidationError("cluster node id out of range", c, node);
            if (seen[node]++) throw ValidationError("node appears in more than one cluster", c, node);
        }
    }
    for (int node = 0; node < n_nodes; ++node)
        if (!seen[node]) throw ValidationError("node " + std::to_string(node) + " is not assigned to a stage");
    std::vector<int> used(a.s, 0);
    for (int c : a.order) {
        if (c < 0 || c >= a.s || used[c]++) throw ValidationError("order must be a permutation of clusters");
    }
}

double cluster_link_cost(const Topology& topology, std::span<const int> a, std::span<const int> b,
                         double msg_bytes) {
    double sum = 0.0;
    for (int x : a)
        for (int y : b) sum += comm_time(topology, x, y, msg_bytes);
    return sum / (static_cast<double>(a.size()) * b.size());
}

double tour_cost(const Topology& topology, const std::vector<std::vector<int>>& members,
                 std::span<const int> order, double msg_bytes) {
    double cost = 0.0;
    for (size_t i = 0; i < order.size(); ++i) {
        const int from = order[i];
        const int to = order[(i + 1) % order.size()];
        if (from == to) continue;
        cost += cluster_link_cost(topology, members[from], members[to], msg_bytes);
    }
    return cost;
}

StageAssignment order_stages(const Topology& topology, const std::vector<std::vector<int>>& members,
                             double msg_bytes) {
    const int s = static_cast<int>(members.size());
    if (s < 1) throw ValidationError("no clusters to order");
    if (s > kMaxExactTspStages)
        throw ValidationError("exact stage ordering supports at most " + std::to_string(kMaxExactTspStages) +
                              " stages; " + std::to_string(s) + " requested needs the heuristic solver");

    StageAssignment out;
    out.s = s;
    out.members = members;
    for (const auto& m : members) out.sizes.push_back(static_cast<int>(m.size()));
    validate(StageAssignment{s, out.sizes, members, [&] {
                                 std::vector<int> o(s);
                                 std::iota(o.begin(), o.end(), 0);
                                 return o;
                             }()},
             topology.n);

    int start = 0;
    for (int c = 1; c < s; ++c)
        if (out.sizes[c] > out.sizes[start]) start = c;

    std::vector<std::vector<double>> w(s, std::vector<double>(s, 0.0));
    for (int a = 0; a < s; ++a)
        for (int b = 0; b < s; ++b)
            if (a != b) w[a][b] = cluster_link_cost(topology, members[a], members[b], msg_bytes);

    // togo[mask][last]: cheapest way to visit every cluster outside `mask`
    // starting at `last`, then close the loop back to `start`.
    const int full = (1 << s) - 1;
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> togo(full + 1, std::vector<double>(s, inf));
    for (int last = 0; last < s; ++last) togo[full][last] = last == start ? 0.0 : w[last][start];
    for (int mask = full - 1; mask >= 0; --mask) {
        if (!(mask & (1 << start))) continue;
        for (int last = 0; last < s; ++last) {
            if (!(mask & (1 << last))) continue;
            double best = inf;
            for (int j = 0; j < s; ++j)
                if (!(mask & (1 << j))) best = std::min(best, w[last][j] + togo[mask | (1 << j)][j]);
            togo[mask][last] = best;
        }
    }

    out.order = {start};
    int mask = 1 << start;
    int last = start;
    while (mask != full) {
        const double target = togo[mask][last];
        const double tol = 1e-9 * std::max(1.0, std::abs(target));
        for (int j = 0; j < s; ++j) {
            if (mask & (1 << j)) continue;
            if (w[last][j] + togo[mask | (1 << j)][j] <= target + tol) {
                out.order.push_back(j);
                mask |= 1 << j;
                last = j;
                break;
            }
        }
    }
    return out;
}

StageAssignment allocate(const Topology& topology, int s, double k, const AllocationOptions& options) {
    const auto sizes = stage_sizes(topology.n, s, k);
    const auto clustering = cluster_nodes(topology, sizes, options.dp_msg_bytes, options.ga);
    return order_stages(topology, clustering.members, options.activation_bytes);
}

}  // namespace skippipe

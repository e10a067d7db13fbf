#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skippipe/allocation.hpp"
#include "skippipe/scheduler.hpp"
#include "skippipe/serialization.hpp"
#include "skippipe/simulator.hpp"
#include "skippipe/topology.hpp"

namespace skippipe {

/// Regions of about five nodes; fast links inside a region, slow ones across.
TopologyProfile default_geo_profile(int n_nodes, std::uint64_t seed = 0);

struct ExperimentSpec {
    std::optional<TopologyProfile> profile;
    std::optional<std::filesystem::path> topology_file;
    int stages = 4;
    double k = 25.0;
    int mem_capacity = 2;
    int samples_per_microbatch = 1;
    ModelPreset preset = model_preset("llama-1.5b");
    int total_microbatches = 36;
    std::vector<BaselineKind> variants{BaselineKind::DtfmFull, BaselineKind::DtfmSkip, BaselineKind::SkipPipeNoTc2,
                                       BaselineKind::SkipPipe};
    int repetitions = 1;
    std::uint64_t seed = 1;
    GAConfig ga;
    SchedulerConfig scheduler;
    int threads = 0;  // 0: hardware concurrency
};

void validate(const ExperimentSpec& spec);
void to_json(json& j, const ExperimentSpec& spec);
void from_json(const json& j, ExperimentSpec& spec);

struct VariantOutcome {
    BaselineKind kind = BaselineKind::SkipPipe;
    bool ok = false;
    std::string error;
    bool resolved = false;
    double makespan_ms = 0.0;
    double reported_ms = 0.0;  // makespan, compensated for full-pipeline baselines on fewer nodes
    int nodes_used = 0;
    int nodes_total = 0;
    std::optional<Schedule> schedule;
    std::optional<SimReport> report;
};

struct RepetitionResult {
    int index = 0;
    std::uint64_t seed = 0;
    std::string error;  // set when the repetition failed before any variant ran
    std::vector<VariantOutcome> outcomes;
};

struct ExperimentResult {
    std::vector<RepetitionResult> repetitions;
    int failures = 0;
    std::string aggregate_csv;
    std::string summary_csv;
};

/// Sample -> allocate -> schedule every variant -> simulate, once.
RepetitionResult run_repetition(const ExperimentSpec& spec, int index);

/// All repetitions (concurrently), then aggregation in repetition order.
/// With a non-empty out_dir writes rep_NNN/<variant>.schedule.json and
/// .report.json, aggregate.csv and summary.csv.
ExperimentResult run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir = {});

}  // namespace skippipe

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "noisy_ood/feature_bank.hpp"
#include "noisy_ood/metrics.hpp"
#include "noisy_ood/noise.hpp"
#include "noisy_ood/synth_data.hpp"
#include "noisy_ood/trainer.hpp"

namespace noisy_ood {

enum class Condition { Baseline, NoiseAugmented };

std::string_view to_string(Condition c);
std::optional<Condition> parse_condition(std::string_view name);
/// Row label used in the markdown tables ("Baseline", "Noise Augment.").
std::string_view condition_title(Condition c);

/// One choice of ID and OOD sources with its split counts.
struct Composition {
    std::string name;
    std::vector<SourceSpec> id_sources;
    std::vector<SourceSpec> ood_sources;
    SplitCounts counts;
};

struct ExperimentConfig {
    // data
    SynthParams synth;
    int target_size = 32;
    std::uint64_t data_seed = 20240611;  // sources without an explicit base_seed use data_seed ^ index
    bool fixed_splits = false;           // true: every seed shares the split drawn from split_seed
    std::uint64_t split_seed = 0;
    Composition main;
    std::vector<Composition> ablations;

    BankConfig bank;
    std::uint64_t bank_seed = 1234;
    TrainConfig train;  // template; noise_policy and seed are set per run
    NoisePolicy noise;
    double threshold = 0.5;

    std::vector<std::uint64_t> seeds{kDefaultSeeds.begin(), kDefaultSeeds.end()};
    std::vector<Condition> conditions{Condition::Baseline, Condition::NoiseAugmented};
    std::string output_dir = "results";

    /// Throws Error(Config) naming the offending JSON path.
    void validate() const;
};

/// The synthetic setup: one class-0 and one class-1 ID source, the class-1
/// source carrying a border texture artifact, four clean OOD sources, and the
/// 509/56/97/849 split.
ExperimentConfig default_config();

/// Parses a JSON config; absent keys take defaults. Errors carry the JSON path.
ExperimentConfig config_from_json(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Fully resolved config (all defaults and derived seeds filled in).
std::string config_to_json(const ExperimentConfig& cfg);

struct RunResult {
    std::string table;
    Condition condition = Condition::Baseline;
    std::uint64_t seed = 0;
    MetricsRecord id_metrics;
    MetricsRecord ood_metrics;
    GapRecord gap;
    TrainedModel model;
};

/// Data split for one seed of a composition. Splits depend only on the seed
/// (data stream = seed ^ 1) unless fixed_splits is set.
ExperimentData build_data(const ExperimentConfig& cfg, const Composition& comp, std::uint64_t seed);

TrainConfig train_config_for(const ExperimentConfig& cfg, Condition condition, std::uint64_t seed);

/// Trains and evaluates one (condition, seed) cell of the main composition.
RunResult run_condition(const ExperimentConfig& cfg, Condition condition, std::uint64_t seed);

/// Same, on prebuilt data and bank.
RunResult run_condition(const ExperimentConfig& cfg, const ExperimentData& data, const FeatureBank& bank,
                        std::string table, Condition condition, std::uint64_t seed);

struct ConditionSummary {
    Condition condition = Condition::Baseline;
    SeedAggregate aggregate;
};

struct TableReport {
    std::string name;  // "main" or the ablation name
    std::vector<ConditionSummary> rows;
};

struct Report {
    std::vector<TableReport> tables;
    std::vector<RunResult> runs;  // table-major, then seed, then condition

    const TableReport* table(std::string_view name) const;
    const ConditionSummary* row(std::string_view table, Condition c) const;
};

/// Worker count: NOISY_OOD_THREADS if set and positive, otherwise the
/// hardware concurrency. `override_threads` > 0 takes precedence.
int resolve_threads(int override_threads = 0);

/// Runs every table x seed x condition cell (in parallel across table/seed
/// pairs) and aggregates per table and condition. Output is independent of
/// the thread count.
Report run_experiment(const ExperimentConfig& cfg, int threads = 0);

/// Builds a report from already computed runs (grouping by table, condition).
Report assemble_report(const ExperimentConfig& cfg, std::vector<RunResult> runs);

}  // namespace noisy_ood

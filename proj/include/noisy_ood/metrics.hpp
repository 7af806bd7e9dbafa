#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "noisy_ood/synth_data.hpp"

namespace noisy_ood {

class FeatureBank;
struct TrainedModel;

/// Metric order used by every table: AUC, F1, Acc., Rec., Spec.
enum class Metric { Auc, F1, Accuracy, Recall, Specificity };

inline constexpr std::array<Metric, 5> kMetrics = {Metric::Auc, Metric::F1, Metric::Accuracy, Metric::Recall,
                                                   Metric::Specificity};

/// Short column key ("auc", "f1", "acc", "rec", "spec").
std::string_view metric_key(Metric m);
/// Table heading ("AUC", "F1", "Acc.", "Rec.", "Spec.").
std::string_view metric_title(Metric m);

/// Mann-Whitney AUC with label 1 as the positive class: the fraction of
/// (positive, negative) pairs where the positive scores higher, ties counting
/// one half. Computed from tie-averaged ranks in exact integer arithmetic, so it
/// equals the pairwise count bit for bit. Throws if either class is absent.
double auc(std::span<const double> scores, std::span<const int> labels);

struct Confusion {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    std::int64_t total() const { return tp + fp + tn + fn; }
    friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// Predicts 1 iff score >= threshold.
Confusion confusion(std::span<const double> scores, std::span<const int> labels, double threshold);

struct MetricsRecord {
    double auc = 0.0;
    double accuracy = 0.0;
    double f1 = 0.0;
    double recall = 0.0;
    double specificity = 0.0;
    std::int64_t n_samples = 0;
    std::int64_t n_positive = 0;
    std::int64_t n_negative = 0;
    // Set when the metric's denominator was zero and the value defaulted to 0.
    bool recall_degenerate = false;
    bool specificity_degenerate = false;
    bool f1_degenerate = false;

    double value(Metric m) const;
    friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

/// Threshold metrics from confusion counts; auc is left at 0 for the caller.
MetricsRecord derive_metrics(const Confusion& counts);

/// Scores `dataset` with the model on clean images and returns AUC plus the
/// threshold metrics. Throws if the dataset lacks either class.
MetricsRecord evaluate(const TrainedModel& model, const FeatureBank& bank, const Dataset& dataset,
                       double threshold = 0.5);

/// Same, from precomputed scores.
MetricsRecord score_metrics(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

struct GapEntry {
    double id = 0.0;
    double ood = 0.0;
    double diff = 0.0;  // id - ood
};

struct GapRecord {
    std::array<GapEntry, kMetrics.size()> entries{};

    const GapEntry& operator[](Metric m) const { return entries[static_cast<std::size_t>(m)]; }
};

GapRecord make_gap(const MetricsRecord& id, const MetricsRecord& ood);

struct SummaryStats {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation, 0 for a single run
};

struct MetricAggregate {
    SummaryStats id;
    SummaryStats ood;
    SummaryStats diff;
    SummaryStats abs_diff;
};

struct SeedAggregate {
    std::array<MetricAggregate, kMetrics.size()> metrics{};
    std::vector<std::uint64_t> seeds;

    const MetricAggregate& operator[](Metric m) const { return metrics[static_cast<std::size_t>(m)]; }
};

SeedAggregate aggregate(std::span<const GapRecord> records, std::span<const std::uint64_t> seeds);

SummaryStats summarize(std::span<const double> values);

/// The seed list used for every reported experiment.
inline constexpr std::array<std::uint64_t, 10> kDefaultSeeds = {73, 7, 46, 24, 49, 94, 29, 34, 8, 25};

}  // namespace noisy_ood

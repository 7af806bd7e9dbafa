#include "noisy_ood/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "noisy_ood/error.hpp"
#include "noisy_ood/feature_bank.hpp"
#include "noisy_ood/trainer.hpp"

namespace noisy_ood {

namespace {

void check_labels(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw_invalid("scores and labels differ in length (" + std::to_string(scores.size()) + " vs " +
                      std::to_string(labels.size()) + ")");
    }
    for (int y : labels) {
        if (y != 0 && y != 1) throw_invalid("labels must be 0 or 1, got " + std::to_string(y));
    }
    for (double s : scores) {
        if (std::isnan(s)) throw_invalid("scores must not be NaN");
    }
}

double ratio(std::int64_t num, std::int64_t den, bool& degenerate) {
    degenerate = den == 0;
    return degenerate ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::string_view metric_key(Metric m) {
    switch (m) {
        case Metric::Auc: return "auc";
        case Metric::F1: return "f1";
        case Metric::Accuracy: return "acc";
        case Metric::Recall: return "rec";
        case Metric::Specificity: return "spec";
    }
    return "?";
}

std::string_view metric_title(Metric m) {
    switch (m) {
        case Metric::Auc: return "AUC";
        case Metric::F1: return "F1";
        case Metric::Accuracy: return "Acc.";
        case Metric::Recall: return "Rec.";
        case Metric::Specificity: return "Spec.";
    }
    return "?";
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    check_labels(scores, labels);
    const std::size_t n = scores.size();
    std::int64_t n_pos = 0;
    for (int y : labels) n_pos += y;
    const std::int64_t n_neg = static_cast<std::int64_t>(n) - n_pos;
    if (n_pos == 0 || n_neg == 0) throw_invalid("AUC is undefined unless both classes are present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Twice the tie-averaged 1-based rank of each tie group is (first + last + 2),
    // an integer, so the rank sum stays exact.
    std::int64_t twice_rank_sum_pos = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const auto twice_rank = static_cast<std::int64_t>(i + j + 2);
        for (std::size_t t = i; t <= j; ++t) {
            if (labels[order[t]] == 1) twice_rank_sum_pos += twice_rank;
        }
        i = j + 1;
    }
    // 2U = 2 R_pos - n_pos (n_pos + 1); U counts pairs won plus half the ties.
    const std::int64_t twice_u = twice_rank_sum_pos - n_pos * (n_pos + 1);
    return (static_cast<double>(twice_u) / 2.0) / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

Confusion confusion(std::span<const double> scores, std::span<const int> labels, double threshold) {
    check_labels(scores, labels);
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (labels[i] == 1) {
            (predicted ? c.tp : c.fn) += 1;
        } else {
            (predicted ? c.fp : c.tn) += 1;
        }
    }
    return c;
}

double MetricsRecord::value(Metric m) const {
    switch (m) {
        case Metric::Auc: return auc;
        case Metric::F1: return f1;
        case Metric::Accuracy: return accuracy;
        case Metric::Recall: return recall;
        case Metric::Specificity: return specificity;
    }
    return 0.0;
}

MetricsRecord derive_metrics(const Confusion& counts) {
    if (counts.total() < 1) throw_invalid("derive_metrics: empty confusion table");
    MetricsRecord r;
    r.n_samples = counts.total();
    r.n_positive = counts.tp + counts.fn;
    r.n_negative = counts.tn + counts.fp;
    r.accuracy = static_cast<double>(counts.tp + counts.tn) / static_cast<double>(r.n_samples);
    r.recall = ratio(counts.tp, counts.tp + counts.fn, r.recall_degenerate);
    r.specificity = ratio(counts.tn, counts.tn + counts.fp, r.specificity_degenerate);
    r.f1 = ratio(2 * counts.tp, 2 * counts.tp + counts.fp + counts.fn, r.f1_degenerate);
    return r;
}

MetricsRecord score_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
    const double area = auc(scores, labels);
    MetricsRecord r = derive_metrics(confusion(scores, labels, threshold));
    r.auc = area;
    // Accuracy must decompose over the two classes.
    const double recomposed =
        (r.recall * static_cast<double>(r.n_positive) + r.specificity * static_cast<double>(r.n_negative)) /
        static_cast<double>(r.n_samples);
    if (std::fabs(recomposed - r.accuracy) > 1e-12) {
        throw Error(ErrorKind::Run, "internal error: accuracy does not decompose into recall and specificity");
    }
    return r;
}

MetricsRecord evaluate(const TrainedModel& model, const FeatureBank& bank, const Dataset& dataset, double threshold) {
    if (dataset.empty()) throw_invalid("evaluate: empty dataset");
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(dataset.size());
    labels.reserve(dataset.size());
    for (const LabeledImage& item : dataset) {
        scores.push_back(model.score(bank.extract(item.image)));
        labels.push_back(item.label);
    }
    return score_metrics(scores, labels, threshold);
}

GapRecord make_gap(const MetricsRecord& id, const MetricsRecord& ood) {
    GapRecord g;
    for (Metric m : kMetrics) {
        auto& e = g.entries[static_cast<std::size_t>(m)];
        e.id = id.value(m);
        e.ood = ood.value(m);
        e.diff = e.id - e.ood;
    }
    return g;
}

SummaryStats summarize(std::span<const double> values) {
    if (values.empty()) throw_invalid("summarize: no values");
    SummaryStats s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

SeedAggregate aggregate(std::span<const GapRecord> records, std::span<const std::uint64_t> seeds) {
    if (records.empty()) throw_invalid("aggregate: no records");
    if (records.size() != seeds.size()) {
        throw_invalid("aggregate: " + std::to_string(records.size()) + " records but " +
                      std::to_string(seeds.size()) + " seeds");
    }
    SeedAggregate agg;
    agg.seeds.assign(seeds.begin(), seeds.end());
    std::vector<double> id, ood, diff, abs_diff;
    for (Metric m : kMetrics) {
        id.clear();
        ood.clear();
        diff.clear();
        abs_diff.clear();
        for (const GapRecord& r : records) {
            id.push_back(r[m].id);
            ood.push_back(r[m].ood);
            diff.push_back(r[m].diff);
            abs_diff.push_back(std::fabs(r[m].diff));
        }
        auto& out = agg.metrics[static_cast<std::size_t>(m)];
        out.id = summarize(id);
        out.ood = summarize(ood);
        out.diff = summarize(diff);
        out.abs_diff = summarize(abs_diff);
    }
    return agg;
}

}  // namespace noisy_ood

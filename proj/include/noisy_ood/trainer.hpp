#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "noisy_ood/feature_bank.hpp"
#include "noisy_ood/noise.hpp"
#include "noisy_ood/synth_data.hpp"

namespace noisy_ood {

/// Logistic classification head: p = sigmoid(w . f + b).
struct HeadParams {
    std::vector<double> weights;
    double bias = 0.0;

    static HeadParams zeros(std::size_t dim) { return HeadParams{std::vector<double>(dim, 0.0), 0.0}; }
    friend bool operator==(const HeadParams&, const HeadParams&) = default;
};

struct Gradient {
    std::vector<double> weights;
    double bias = 0.0;
};

/// Frozen per-feature standardization fitted on the clean training features
/// before the first epoch: z = (f - mean) * inv_std. Features with zero spread
/// keep inv_std = 1.
struct FeatureScaler {
    std::vector<double> mean;
    std::vector<double> inv_std;

    static FeatureScaler fit(std::span<const FeatureVector> features);
    static FeatureScaler identity(std::size_t dim);
    FeatureVector apply(std::span<const double> f) const;
    friend bool operator==(const FeatureScaler&, const FeatureScaler&) = default;
};

double sigmoid(double z);

double forward(const HeadParams& head, std::span<const double> f);

/// Mean binary cross-entropy with p clamped to [1e-7, 1 - 1e-7].
double bce_loss(std::span<const double> probs, std::span<const int> labels);

/// Analytic gradient of the mean BCE of sigmoid(w . f + b) over the batch.
Gradient grad(const HeadParams& head, std::span<const FeatureVector> features, std::span<const int> labels);

struct AdamState {
    std::vector<double> m;  // first moments, weights then bias
    std::vector<double> v;  // second moments, same layout
    std::int64_t step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState zeros(std::size_t dim) {
        AdamState s;
        s.m.assign(dim + 1, 0.0);
        s.v.assign(dim + 1, 0.0);
        return s;
    }
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, HeadParams& params, const Gradient& g, double lr);

struct TrainConfig {
    double learning_rate = 1e-4;
    double lr_decay_gamma = 0.99;  // multiplied into the rate after every epoch
    int max_epochs = 100;
    int patience = 5;
    int batch_size = 32;
    std::optional<NoisePolicy> noise_policy;  // empty = baseline condition
    std::uint64_t seed = 0;                   // run seed; shuffle/noise streams derive from it

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_auc = 0.0;
    double lr = 0.0;  // rate used during this epoch: lr0 * gamma^(epoch - 1)
};

/// Tracks the best validation score and signals a stop once `patience`
/// consecutive epochs pass without a new strict maximum.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience);

    /// Feeds the score for the next epoch. Returns true if it is a new best.
    bool update(double score);
    bool should_stop() const { return since_best_ >= patience_; }
    int best_epoch() const { return best_epoch_; }
    double best_score() const { return best_score_; }
    int epochs_seen() const { return epoch_; }

private:
    int patience_;
    int epoch_ = 0;
    int best_epoch_ = 0;
    int since_best_ = 0;
    double best_score_ = 0.0;
};

struct TrainedModel {
    HeadParams head;  // parameters from best_epoch
    FeatureScaler scaler;
    std::vector<EpochRecord> history;
    int stopped_epoch = 0;
    int best_epoch = 0;
    bool patience_triggered = false;

    /// Probability of class 1 for raw (unscaled) bank features.
    double score(std::span<const double> features) const { return forward(head, scaler.apply(features)); }
};

/// Minibatch Adam training of the head on frozen bank features with early
/// stopping on clean validation AUC; returns the best-epoch parameters.
TrainedModel train(const ExperimentData& data, const FeatureBank& bank, const TrainConfig& cfg);

/// `epoch,train_loss,val_auc,lr`, full precision.
void write_history_csv(const std::filesystem::path& path, std::span<const EpochRecord> history);

// Checkpoint layout (little-endian): u64 dim, u64 best_epoch, then float32
// weights[dim], bias, scaler mean[dim], scaler inv_std[dim].
void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace noisy_ood

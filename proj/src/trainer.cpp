#include "noisy_ood/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>

#include "noisy_ood/error.hpp"
#include "noisy_ood/metrics.hpp"
#include "noisy_ood/rng.hpp"

namespace noisy_ood {

namespace {

constexpr double kProbClamp = 1e-7;

void check_dim(std::size_t expected, std::size_t got) {
    if (expected != got) {
        throw_invalid("dimension mismatch: head has " + std::to_string(expected) + " weights, features have " +
                      std::to_string(got));
    }
}

bool has_both_classes(const Dataset& d) {
    bool seen[2] = {false, false};
    for (const auto& item : d) seen[item.label] = true;
    return seen[0] && seen[1];
}

std::vector<FeatureVector> scaled_features(const FeatureBank& bank, const FeatureScaler& scaler, const Dataset& d) {
    std::vector<FeatureVector> out;
    out.reserve(d.size());
    for (const auto& item : d) out.push_back(scaler.apply(bank.extract(item.image)));
    return out;
}

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 8);
}

void put_f32(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), 8)) throw_io("truncated checkpoint header");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

double get_f32(std::istream& in) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) throw_io("truncated checkpoint payload");
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return static_cast<double>(std::bit_cast<float>(bits));
}

}  // namespace

FeatureScaler FeatureScaler::fit(std::span<const FeatureVector> features) {
    if (features.empty()) throw_invalid("FeatureScaler::fit: no features");
    const std::size_t dim = features.front().size();
    FeatureScaler s;
    s.mean.assign(dim, 0.0);
    s.inv_std.assign(dim, 1.0);
    for (const auto& f : features) {
        check_dim(dim, f.size());
        for (std::size_t j = 0; j < dim; ++j) s.mean[j] += f[j];
    }
    const auto n = static_cast<double>(features.size());
    for (double& m : s.mean) m /= n;
    std::vector<double> var(dim, 0.0);
    for (const auto& f : features) {
        for (std::size_t j = 0; j < dim; ++j) var[j] += (f[j] - s.mean[j]) * (f[j] - s.mean[j]);
    }
    for (std::size_t j = 0; j < dim; ++j) {
        const double sd = std::sqrt(var[j] / n);
        if (sd > 1e-12) s.inv_std[j] = 1.0 / sd;
    }
    return s;
}

FeatureScaler FeatureScaler::identity(std::size_t dim) {
    return FeatureScaler{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

FeatureVector FeatureScaler::apply(std::span<const double> f) const {
    check_dim(mean.size(), f.size());
    FeatureVector out(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) out[j] = (f[j] - mean[j]) * inv_std[j];
    return out;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double forward(const HeadParams& head, std::span<const double> f) {
    check_dim(head.weights.size(), f.size());
    double z = head.bias;
    for (std::size_t j = 0; j < f.size(); ++j) z += head.weights[j] * f[j];
    return sigmoid(z);
}

double bce_loss(std::span<const double> probs, std::span<const int> labels) {
    if (probs.empty()) throw_invalid("bce_loss: empty input");
    if (probs.size() != labels.size()) throw_invalid("bce_loss: probabilities and labels differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
        total -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
    }
    return total / static_cast<double>(probs.size());
}

Gradient grad(const HeadParams& head, std::span<const FeatureVector> features, std::span<const int> labels) {
    if (features.empty()) throw_invalid("grad: empty batch");
    if (features.size() != labels.size()) throw_invalid("grad: features and labels differ in length");
    Gradient g{std::vector<double>(head.weights.size(), 0.0), 0.0};
    for (std::size_t i = 0; i < features.size(); ++i) {
        const double err = forward(head, features[i]) - labels[i];
        for (std::size_t j = 0; j < g.weights.size(); ++j) g.weights[j] += err * features[i][j];
        g.bias += err;
    }
    const auto n = static_cast<double>(features.size());
    for (double& w : g.weights) w /= n;
    g.bias /= n;
    return g;
}

void adam_step(AdamState& state, HeadParams& params, const Gradient& g, double lr) {
    const std::size_t dim = params.weights.size();
    if (g.weights.size() != dim || state.m.size() != dim + 1 || state.v.size() != dim + 1) {
        throw_invalid("adam_step: parameter, gradient and state shapes disagree");
    }
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    auto update = [&](std::size_t j, double gj, double& theta) {
        state.m[j] = state.beta1 * state.m[j] + (1.0 - state.beta1) * gj;
        state.v[j] = state.beta2 * state.v[j] + (1.0 - state.beta2) * gj * gj;
        const double m_hat = state.m[j] / c1;
        const double v_hat = state.v[j] / c2;
        theta -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    };
    for (std::size_t j = 0; j < dim; ++j) update(j, g.weights[j], params.weights[j]);
    update(dim, g.bias, params.bias);
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw_invalid("learning_rate must be > 0");
    if (!(lr_decay_gamma > 0.0 && lr_decay_gamma <= 1.0)) throw_invalid("lr_decay_gamma must be in (0, 1]");
    if (max_epochs < 1) throw_invalid("max_epochs must be >= 1");
    if (patience < 1) throw_invalid("patience must be >= 1");
    if (batch_size < 1) throw_invalid("batch_size must be >= 1");
    if (noise_policy) noise_policy->validate();
}

EarlyStopping::EarlyStopping(int patience) : patience_(patience) {
    if (patience < 1) throw_invalid("patience must be >= 1");
}

bool EarlyStopping::update(double score) {
    ++epoch_;
    if (epoch_ == 1 || score > best_score_) {
        best_score_ = score;
        best_epoch_ = epoch_;
        since_best_ = 0;
        return true;
    }
    ++since_best_;
    return false;
}

TrainedModel train(const ExperimentData& data, const FeatureBank& bank, const TrainConfig& cfg) {
    cfg.validate();
    if (data.train.empty() || data.validation.empty()) throw_invalid("train: train and validation splits must be nonempty");
    if (!has_both_classes(data.validation)) {
        throw_invalid("train: validation split has a single class, validation AUC is undefined");
    }
    if (!has_both_classes(data.train)) throw_invalid("train: training split has a single class");

    std::vector<FeatureVector> clean_train;
    clean_train.reserve(data.train.size());
    for (const auto& item : data.train) clean_train.push_back(bank.extract(item.image));

    TrainedModel model;
    model.scaler = FeatureScaler::fit(clean_train);
    for (auto& f : clean_train) f = model.scaler.apply(f);
    const auto val_features = scaled_features(bank, model.scaler, data.validation);

    std::vector<int> train_labels, val_labels;
    for (const auto& item : data.train) train_labels.push_back(item.label);
    for (const auto& item : data.validation) val_labels.push_back(item.label);

    const std::size_t dim = static_cast<std::size_t>(bank.feature_dim());
    HeadParams head = HeadParams::zeros(dim);
    AdamState adam = AdamState::zeros(dim);
    RngStream shuffle_rng(cfg.seed ^ kShuffleStreamTag);
    RngStream noise_rng(cfg.seed ^ kNoiseStreamTag);
    EarlyStopping stopper(cfg.patience);

    const std::size_t n = data.train.size();
    std::vector<std::size_t> order(n);
    std::vector<FeatureVector> epoch_features;
    std::vector<FeatureVector> batch;
    std::vector<int> batch_labels;
    std::vector<double> batch_probs;
    std::vector<double> val_scores(val_features.size());

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const double lr = cfg.learning_rate * std::pow(cfg.lr_decay_gamma, epoch - 1);

        const std::vector<FeatureVector>* features = &clean_train;
        if (cfg.noise_policy) {
            // Fresh noise for every training image, drawn in dataset order.
            epoch_features.clear();
            epoch_features.reserve(n);
            for (const auto& item : data.train) {
                auto noised = augment(item.image, *cfg.noise_policy, noise_rng);
                epoch_features.push_back(model.scaler.apply(bank.extract(noised.first)));
            }
            features = &epoch_features;
        }

        std::iota(order.begin(), order.end(), 0);
        shuffle_rng.shuffle(order.begin(), order.end());

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
            batch.clear();
            batch_labels.clear();
            batch_probs.clear();
            for (std::size_t i = start; i < stop; ++i) {
                batch.push_back((*features)[order[i]]);
                batch_labels.push_back(train_labels[order[i]]);
                batch_probs.push_back(forward(head, batch.back()));
            }
            loss_sum += bce_loss(batch_probs, batch_labels) * static_cast<double>(batch.size());
            adam_step(adam, head, grad(head, batch, batch_labels), lr);
        }

        for (std::size_t i = 0; i < val_features.size(); ++i) val_scores[i] = forward(head, val_features[i]);
        const double val_auc = auc(val_scores, val_labels);
        model.history.push_back(EpochRecord{epoch, loss_sum / static_cast<double>(n), val_auc, lr});
        model.stopped_epoch = epoch;

        if (stopper.update(val_auc)) model.head = head;
        if (stopper.should_stop()) {
            model.patience_triggered = true;
            break;
        }
    }
    model.best_epoch = stopper.best_epoch();
    return model;
}

void write_history_csv(const std::filesystem::path& path, std::span<const EpochRecord> history) {
    std::ofstream out(path);
    if (!out) throw_io("cannot open " + path.string() + " for writing");
    out << "epoch,train_loss,val_auc,lr\n";
    char line[160];
    for (const auto& r : history) {
        std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g\n", r.epoch, r.train_loss, r.val_auc, r.lr);
        out << line;
    }
    if (!out) throw_io("failed writing " + path.string());
}

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot open " + path.string() + " for writing");
    const std::size_t dim = model.head.weights.size();
    if (model.scaler.mean.size() != dim || model.scaler.inv_std.size() != dim) {
        throw_invalid("save_checkpoint: scaler and head dimensions disagree");
    }
    put_u64(out, dim);
    put_u64(out, static_cast<std::uint64_t>(model.best_epoch));
    for (double w : model.head.weights) put_f32(out, w);
    put_f32(out, model.head.bias);
    for (double m : model.scaler.mean) put_f32(out, m);
    for (double s : model.scaler.inv_std) put_f32(out, s);
    if (!out) throw_io("failed writing " + path.string());
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open checkpoint " + path.string());
    const auto dim = get_u64(in);
    const auto best_epoch = get_u64(in);
    if (dim == 0 || dim > (1u << 24)) throw_io("checkpoint " + path.string() + " has implausible dimension");
    TrainedModel model;
    model.best_epoch = static_cast<int>(best_epoch);
    model.stopped_epoch = model.best_epoch;
    model.head = HeadParams::zeros(dim);
    for (double& w : model.head.weights) w = get_f32(in);
    model.head.bias = get_f32(in);
    model.scaler.mean.resize(dim);
    model.scaler.inv_std.resize(dim);
    for (double& m : model.scaler.mean) m = get_f32(in);
    for (double& s : model.scaler.inv_std) s = get_f32(in);
    return model;
}

}  // namespace noisy_ood

#include "noisy_ood/feature_bank.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "noisy_ood/error.hpp"
#include "noisy_ood/rng.hpp"

namespace noisy_ood {

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U bits = std::bit_cast<U>(value);
    unsigned char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename T>
T get_le(std::istream& in) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    unsigned char buf[sizeof(U)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) throw_io("truncated feature bank file");
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
    return std::bit_cast<T>(bits);
}

}  // namespace

void BankConfig::validate() const {
    if (filters < 1) throw_invalid("bank filters must be >= 1, got " + std::to_string(filters));
    if (kernel < 1 || kernel % 2 == 0) throw_invalid("bank kernel must be a positive odd size, got " + std::to_string(kernel));
    if (pool < 1) throw_invalid("bank pool grid must be >= 1, got " + std::to_string(pool));
}

FeatureBank::FeatureBank(std::uint64_t seed, const BankConfig& config) : config_(config), seed_(seed) {
    config_.validate();
    RngStream rng(seed);
    const double stddev = 1.0 / config_.kernel;
    filters_.resize(static_cast<std::size_t>(config_.filters) * config_.kernel * config_.kernel);
    for (float& w : filters_) w = static_cast<float>(rng.normal(0.0, stddev));
}

FeatureBank::FeatureBank(const BankConfig& config, std::uint64_t seed, std::vector<float> filters)
    : config_(config), seed_(seed), filters_(std::move(filters)) {
    config_.validate();
    const auto expected = static_cast<std::size_t>(config_.filters) * config_.kernel * config_.kernel;
    if (filters_.size() != expected) {
        throw_invalid("filter buffer has " + std::to_string(filters_.size()) + " weights, expected " +
                      std::to_string(expected));
    }
    for (float w : filters_) {
        if (!std::isfinite(w)) throw_invalid("filter weights must be finite");
    }
}

FeatureBank FeatureBank::from_filters(const BankConfig& config, std::uint64_t seed, std::vector<float> filters) {
    return FeatureBank(config, seed, std::move(filters));
}

FeatureVector FeatureBank::extract(const Image& img) const {
    const int k = config_.kernel;
    const int grid = config_.pool;
    if (img.height() < k || img.width() < k) {
        throw_invalid("image " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                      " is smaller than the " + std::to_string(k) + "x" + std::to_string(k) + " kernel");
    }
    const int out_h = img.height() - k + 1;
    const int out_w = img.width() - k + 1;
    if (out_h < grid || out_w < grid) {
        throw_invalid("convolution output " + std::to_string(out_h) + "x" + std::to_string(out_w) +
                      " is smaller than the pooling grid");
    }
    const int cell_h = out_h / grid;
    const int cell_w = out_w / grid;
    auto cell_of = [grid](int pos, int cell) { return std::min(pos / cell, grid - 1); };

    std::vector<int> row_cell(out_h), col_cell(out_w);
    for (int r = 0; r < out_h; ++r) row_cell[r] = cell_of(r, cell_h);
    for (int c = 0; c < out_w; ++c) col_cell[c] = cell_of(c, cell_w);
    std::vector<double> cell_count(static_cast<std::size_t>(grid) * grid, 0.0);
    for (int r = 0; r < out_h; ++r) {
        for (int c = 0; c < out_w; ++c) cell_count[row_cell[r] * grid + col_cell[c]] += 1.0;
    }

    const auto px = img.pixels();
    const int width = img.width();
    FeatureVector features(static_cast<std::size_t>(feature_dim()), 0.0);
    std::vector<double> row_acc(out_w);
    for (int f = 0; f < config_.filters; ++f) {
        const float* w = filters_.data() + static_cast<std::size_t>(f) * k * k;
        double* cells = features.data() + static_cast<std::size_t>(f) * grid * grid;
        for (int r = 0; r < out_h; ++r) {
            std::fill(row_acc.begin(), row_acc.end(), 0.0);
            for (int i = 0; i < k; ++i) {
                const float* src_row = px.data() + static_cast<std::size_t>(r + i) * width;
                for (int j = 0; j < k; ++j) {
                    const double wij = w[i * k + j];
                    const float* src = src_row + j;
                    for (int c = 0; c < out_w; ++c) row_acc[c] += wij * src[c];
                }
            }
            double* cell_row = cells + row_cell[r] * grid;
            for (int c = 0; c < out_w; ++c) {
                if (row_acc[c] > 0.0) cell_row[col_cell[c]] += row_acc[c];
            }
        }
        for (int cell = 0; cell < grid * grid; ++cell) cells[cell] /= cell_count[cell];
    }
    return features;
}

std::vector<FeatureVector> FeatureBank::extract_batch(std::span<const Image> imgs) const {
    std::vector<FeatureVector> out;
    out.reserve(imgs.size());
    for (const Image& img : imgs) out.push_back(extract(img));
    return out;
}

void FeatureBank::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot open " + path.string() + " for writing");
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(config_.filters));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(config_.kernel));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(config_.pool));
    put_le<std::uint64_t>(out, seed_);
    for (float w : filters_) put_le<float>(out, w);
    if (!out) throw_io("failed writing " + path.string());
}

FeatureBank FeatureBank::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open " + path.string());
    BankConfig cfg;
    cfg.filters = static_cast<int>(get_le<std::uint32_t>(in));
    cfg.kernel = static_cast<int>(get_le<std::uint32_t>(in));
    cfg.pool = static_cast<int>(get_le<std::uint32_t>(in));
    const auto seed = get_le<std::uint64_t>(in);
    cfg.validate();
    std::vector<float> filters(static_cast<std::size_t>(cfg.filters) * cfg.kernel * cfg.kernel);
    for (float& w : filters) w = get_le<float>(in);
    return FeatureBank(cfg, seed, std::move(filters));
}

}  // namespace noisy_ood

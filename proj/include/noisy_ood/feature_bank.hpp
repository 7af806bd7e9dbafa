#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "noisy_ood/image.hpp"

namespace noisy_ood {

struct BankConfig {
    int filters = 32;  // F
    int kernel = 5;    // k, odd
    int pool = 4;      // P, pooling grid is P x P

    void validate() const;
    int feature_dim() const { return filters * pool * pool; }
    friend bool operator==(const BankConfig&, const BankConfig&) = default;
};

using FeatureVector = std::vector<double>;

/// Frozen random-convolution feature extractor.
///
/// Filters are drawn once from Normal(0, 1/k^2) and never change. extract()
/// runs a valid-region convolution per filter, applies ReLU, averages onto a
/// P x P grid of equal cells (the last cell absorbs any remainder), and
/// flattens filter-major: index = f * P^2 + cell_row * P + cell_col.
class FeatureBank {
public:
    FeatureBank(std::uint64_t seed, const BankConfig& config);

    /// Builds a bank from explicit filter weights (F * k * k, filter-major).
    static FeatureBank from_filters(const BankConfig& config, std::uint64_t seed, std::vector<float> filters);

    const BankConfig& config() const noexcept { return config_; }
    std::uint64_t seed() const noexcept { return seed_; }
    int feature_dim() const noexcept { return config_.feature_dim(); }
    std::span<const float> filters() const noexcept { return filters_; }

    FeatureVector extract(const Image& img) const;
    std::vector<FeatureVector> extract_batch(std::span<const Image> imgs) const;

    // Dump layout (little-endian): u32 F, u32 k, u32 P, u64 seed, then
    // F*k*k float32 weights, filter-major, row-major within each kernel.
    void save(const std::filesystem::path& path) const;
    static FeatureBank load(const std::filesystem::path& path);

private:
    FeatureBank(const BankConfig& config, std::uint64_t seed, std::vector<float> filters);

    BankConfig config_;
    std::uint64_t seed_ = 0;
    std::vector<float> filters_;
};

}  // namespace noisy_ood

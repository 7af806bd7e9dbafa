#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "noisy_ood/image.hpp"
#include "noisy_ood/rng.hpp"

namespace noisy_ood {

enum class NoiseKind {
    Gaussian,
    Speckle,
    Poisson,
    SaltPepper,
};

inline constexpr std::array<NoiseKind, 4> kAllNoiseKinds = {
    NoiseKind::Gaussian, NoiseKind::Speckle, NoiseKind::Poisson, NoiseKind::SaltPepper};

/// Config-file spelling: "gaussian", "speckle", "poisson", "salt_pepper".
std::string_view to_string(NoiseKind kind);
std::optional<NoiseKind> parse_noise_kind(std::string_view name);

/// Parameters of the four noise families. Defaults are the augmentation values
/// used for training-time noise injection; poisson_scale is the photon count
/// that maps to a full-scale sample (one count per 8-bit level).
struct NoisePolicy {
    double gaussian_mean = 0.0;
    double gaussian_variance = 0.01;
    double sp_density = 0.05;
    double sp_salt_ratio = 0.5;
    double speckle_variance = 0.01;
    double poisson_scale = 255.0;
    std::vector<NoiseKind> enabled_kinds{kAllNoiseKinds.begin(), kAllNoiseKinds.end()};

    /// Throws Error(InvalidArgument) naming the offending field.
    void validate() const;

    friend bool operator==(const NoisePolicy&, const NoisePolicy&) = default;
};

// All operators return a new image of the input's shape with every sample
// clipped to [0, 1]. They consume draws from `rng` in pixel order, so a given
// (image, parameters, seed) always produces the same output.

/// out = clip(in + n), n ~ Normal(mean, variance) per pixel.
Image apply_gaussian(const Image& img, double mean, double variance, RngStream& rng);

/// out = clip(in * (1 + n)), n ~ Normal(0, variance) per pixel.
Image apply_speckle(const Image& img, double variance, RngStream& rng);

/// Each pixel corrupted with probability `density`; a corrupted pixel becomes
/// 1.0 with probability `salt_ratio`, else 0.0.
Image apply_salt_pepper(const Image& img, double density, double salt_ratio, RngStream& rng);

/// Shot noise: out = clip(Poisson(in * scale) / scale).
Image apply_poisson(const Image& img, double scale, RngStream& rng);

/// Draws one enabled kind uniformly and applies it with the policy parameters.
std::pair<Image, NoiseKind> augment(const Image& img, const NoisePolicy& policy, RngStream& rng);

/// Applies a specific kind with the policy parameters.
Image apply_noise(const Image& img, NoiseKind kind, const NoisePolicy& policy, RngStream& rng);

}  // namespace noisy_ood

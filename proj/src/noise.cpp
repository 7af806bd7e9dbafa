#include "noisy_ood/noise.hpp"

#include <cmath>
#include <string>

#include "noisy_ood/error.hpp"

namespace noisy_ood {

namespace {

void require_variance(double variance, const char* op) {
    if (!(variance >= 0.0) || !std::isfinite(variance)) {
        throw_invalid(std::string(op) + ": variance must be finite and >= 0, got " + std::to_string(variance));
    }
}

void require_unit(double value, const char* op, const char* name) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw_invalid(std::string(op) + ": " + name + " must be in [0, 1], got " + std::to_string(value));
    }
}

}  // namespace

std::string_view to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::Gaussian: return "gaussian";
        case NoiseKind::Speckle: return "speckle";
        case NoiseKind::Poisson: return "poisson";
        case NoiseKind::SaltPepper: return "salt_pepper";
    }
    return "unknown";
}

std::optional<NoiseKind> parse_noise_kind(std::string_view name) {
    for (NoiseKind k : kAllNoiseKinds) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

void NoisePolicy::validate() const {
    if (!std::isfinite(gaussian_mean)) throw_invalid("gaussian_mean must be finite");
    require_variance(gaussian_variance, "gaussian_variance");
    require_variance(speckle_variance, "speckle_variance");
    require_unit(sp_density, "salt_pepper", "sp_density");
    require_unit(sp_salt_ratio, "salt_pepper", "sp_salt_ratio");
    if (!(poisson_scale > 0.0) || !std::isfinite(poisson_scale)) {
        throw_invalid("poisson_scale must be finite and > 0, got " + std::to_string(poisson_scale));
    }
    if (enabled_kinds.empty()) throw_invalid("enabled_kinds must not be empty");
}

Image apply_gaussian(const Image& img, double mean, double variance, RngStream& rng) {
    require_variance(variance, "apply_gaussian");
    if (!std::isfinite(mean)) throw_invalid("apply_gaussian: mean must be finite");
    Image out = img;
    const double stddev = std::sqrt(variance);
    for (float& s : out.pixels()) s = clip01(s + rng.normal(mean, stddev));
    return out;
}

Image apply_speckle(const Image& img, double variance, RngStream& rng) {
    require_variance(variance, "apply_speckle");
    Image out = img;
    const double stddev = std::sqrt(variance);
    for (float& s : out.pixels()) s = clip01(s * (1.0 + stddev * rng.normal()));
    return out;
}

Image apply_salt_pepper(const Image& img, double density, double salt_ratio, RngStream& rng) {
    require_unit(density, "apply_salt_pepper", "density");
    require_unit(salt_ratio, "apply_salt_pepper", "salt_ratio");
    Image out = img;
    for (float& s : out.pixels()) {
        // Two draws per pixel regardless of outcome keeps the stream layout fixed.
        const bool corrupt = rng.bernoulli(density);
        const bool salt = rng.bernoulli(salt_ratio);
        if (corrupt) s = salt ? 1.0f : 0.0f;
    }
    return out;
}

Image apply_poisson(const Image& img, double scale, RngStream& rng) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw_invalid("apply_poisson: scale must be finite and > 0, got " + std::to_string(scale));
    }
    Image out = img;
    for (float& s : out.pixels()) {
        const double counts = static_cast<double>(rng.poisson(static_cast<double>(s) * scale));
        s = clip01(counts / scale);
    }
    return out;
}

Image apply_noise(const Image& img, NoiseKind kind, const NoisePolicy& policy, RngStream& rng) {
    switch (kind) {
        case NoiseKind::Gaussian:
            return apply_gaussian(img, policy.gaussian_mean, policy.gaussian_variance, rng);
        case NoiseKind::Speckle:
            return apply_speckle(img, policy.speckle_variance, rng);
        case NoiseKind::Poisson:
            return apply_poisson(img, policy.poisson_scale, rng);
        case NoiseKind::SaltPepper:
            return apply_salt_pepper(img, policy.sp_density, policy.sp_salt_ratio, rng);
    }
    throw_invalid("apply_noise: unknown noise kind");
}

std::pair<Image, NoiseKind> augment(const Image& img, const NoisePolicy& policy, RngStream& rng) {
    if (policy.enabled_kinds.empty()) throw_invalid("augment: enabled_kinds must not be empty");
    const NoiseKind kind = policy.enabled_kinds[rng.uniform_index(policy.enabled_kinds.size())];
    return {apply_noise(img, kind, policy, rng), kind};
}

}  // namespace noisy_ood

#include "noisy_ood/image.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "noisy_ood/error.hpp"

namespace noisy_ood {

Image::Image(int height, int width, float fill) : height_(height), width_(width) {
    if (height < 1 || width < 1) {
        throw_invalid("image dimensions must be positive, got " + std::to_string(height) + "x" +
                      std::to_string(width));
    }
    pixels_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
}

Image::Image(int height, int width, std::vector<float> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
    if (height < 1 || width < 1) {
        throw_invalid("image dimensions must be positive, got " + std::to_string(height) + "x" +
                      std::to_string(width));
    }
    if (pixels_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
        throw_invalid("pixel buffer length " + std::to_string(pixels_.size()) + " does not match " +
                      std::to_string(height) + "x" + std::to_string(width));
    }
}

bool Image::in_unit_range() const noexcept {
    for (float s : pixels_) {
        if (!std::isfinite(s) || s < 0.0f || s > 1.0f) return false;
    }
    return true;
}

}  // namespace noisy_ood

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace noisy_ood {

/// Grayscale raster, row-major, samples normalized to [0, 1].
class Image {
public:
    Image() = default;
    Image(int height, int width, float fill = 0.0f);
    Image(int height, int width, std::vector<float> pixels);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    bool empty() const noexcept { return pixels_.empty(); }

    float at(int row, int col) const { return pixels_[static_cast<std::size_t>(row) * width_ + col]; }
    float& at(int row, int col) { return pixels_[static_cast<std::size_t>(row) * width_ + col]; }

    std::span<const float> pixels() const noexcept { return pixels_; }
    std::span<float> pixels() noexcept { return pixels_; }

    bool same_shape(const Image& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }

    /// True when every sample is finite and within [0, 1].
    bool in_unit_range() const noexcept;

    friend bool operator==(const Image&, const Image&) = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<float> pixels_;
};

inline float clip01(double v) noexcept {
    if (!(v > 0.0)) return 0.0f;  // also maps NaN to 0
    if (v > 1.0) return 1.0f;
    return static_cast<float>(v);
}

}  // namespace noisy_ood

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "noisy_ood/image.hpp"

namespace noisy_ood {

enum class ShortcutKind {
    None,
    CornerTag,         // flat bright square in the top-left corner
    BorderFrame,       // fine checker texture in a band along the image border
    BrightnessOffset,  // constant offset added to every pixel
};

std::string_view to_string(ShortcutKind kind);
std::optional<ShortcutKind> parse_shortcut_kind(std::string_view name);

/// One image source (a "hospital"): a single class with its own artifact.
struct SourceSpec {
    std::string source_id;
    int class_label = 0;
    int n_images = 1;
    // Amplitude, in intensity units, of the class-discriminative low-frequency
    // pattern and of the source artifact.
    double signal_strength = 0.0;
    double shortcut_amplitude = 0.0;
    ShortcutKind shortcut_kind = ShortcutKind::None;
    std::uint64_t base_seed = 0;

    void validate() const;
    friend bool operator==(const SourceSpec&, const SourceSpec&) = default;
};

/// Rendering constants shared by every source of an experiment.
struct SynthParams {
    int image_size = 64;                // raw square side, before preprocessing
    double background_level = 0.5;     // mean intensity
    double background_amplitude = 0.1;  // low-frequency anatomy-like variation
    double grain_std = 0.02;            // per-pixel sensor grain
    double signal_jitter = 0.5;         // per-image relative std of the class pattern
    double border_fraction = 0.125;     // border band width / image side
    double tag_fraction = 0.0625;       // corner tag side / image side
    int checker_block = 2;              // border texture cell side, raw pixels

    void validate() const;
    friend bool operator==(const SynthParams&, const SynthParams&) = default;
};

struct LabeledImage {
    Image image;
    int label = 0;
    std::string source_id;

    friend bool operator==(const LabeledImage&, const LabeledImage&) = default;
};

using Dataset = std::vector<LabeledImage>;

struct ExperimentData {
    Dataset train;
    Dataset validation;
    Dataset id_test;
    Dataset ood_test;
};

/// Per-class image counts (index = label) for each split.
struct SplitCounts {
    using PerClass = std::array<int, 2>;
    PerClass train{245, 264};
    PerClass validation{27, 29};
    PerClass id_test{38, 59};
    PerClass ood_test{230, 619};

    friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

/// Renders `spec.n_images` raw images. Deterministic in spec.base_seed.
Dataset generate_source(const SourceSpec& spec, const SynthParams& params = {});

/// Generates every source and partitions the raw (unpreprocessed) images.
ExperimentData make_raw_splits(const std::vector<SourceSpec>& id_sources,
                               const std::vector<SourceSpec>& ood_sources, const SplitCounts& counts,
                               std::uint64_t seed, const SynthParams& params = {});

/// Generates every source, preprocesses to `target_size`, and partitions the
/// ID pool into train/validation/id_test and the OOD pool into ood_test.
/// `seed` drives the per-class shuffles that decide the partition.
ExperimentData make_splits(const std::vector<SourceSpec>& id_sources,
                           const std::vector<SourceSpec>& ood_sources, const SplitCounts& counts,
                           std::uint64_t seed, const SynthParams& params = {}, int target_size = 32);

/// Quantizes to 256 levels (floor(s*255 + 1e-4)/255; the offset absorbs float
/// rounding of samples that are already 8-bit aligned).
Image quantize_8bit(const Image& img);

/// Largest centered square crop.
Image center_crop_square(const Image& img);

/// Bilinear resample with half-pixel centers and edge clamping.
Image resize_bilinear(const Image& img, int out_height, int out_width);

/// Center-crop, 8-bit quantize, bilinear resize to target_size x target_size.
Image preprocess(const Image& raw, int target_size);

void preprocess_dataset(Dataset& images, int target_size);

/// Reads a `path,label,source_id` CSV of 8-bit P5 PGM files. Relative paths
/// resolve against the manifest's directory. Errors name the data row.
Dataset load_manifest(const std::filesystem::path& manifest_path);

/// Writes `images` as PGMs under `dir/<stem>/` plus `dir/<stem>.csv`.
void write_manifest(const std::filesystem::path& dir, const std::string& stem, const Dataset& images);

}  // namespace noisy_ood

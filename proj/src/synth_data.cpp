#include "noisy_ood/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "noisy_ood/error.hpp"
#include "noisy_ood/pgm.hpp"
#include "noisy_ood/rng.hpp"

namespace noisy_ood {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kBackgroundComponents = 4;

void require_unit(double v, const std::string& what) {
    if (!(v >= 0.0 && v <= 1.0)) throw_invalid(what + " must be in [0, 1], got " + std::to_string(v));
}

int scaled_extent(double fraction, int size) {
    return std::max(1, static_cast<int>(std::lround(fraction * size)));
}

// Renders one raw image. Draw order per image: for each background component
// (amplitude, fx, fy, phase), then the signal jitter, then one grain deviate
// per pixel in row-major order.
Image render_image(const SourceSpec& spec, const SynthParams& p, RngStream& rng) {
    const int n = p.image_size;
    std::vector<double> acc(static_cast<std::size_t>(n) * n, p.background_level);

    // Low-frequency background: sum of plane waves, evaluated separably via
    // cos(a + b) = cos a cos b - sin a sin b.
    std::vector<double> cx(n), sx(n), cy(n), sy(n);
    for (int c = 0; c < kBackgroundComponents; ++c) {
        const double amp = rng.normal() * p.background_amplitude * 0.5;
        const double fx = 0.5 + 1.5 * rng.uniform();
        const double fy = 0.5 + 1.5 * rng.uniform();
        const double phase = kTwoPi * rng.uniform();
        for (int i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / n;
            cx[i] = std::cos(kTwoPi * fx * t + phase);
            sx[i] = std::sin(kTwoPi * fx * t + phase);
            cy[i] = std::cos(kTwoPi * fy * t);
            sy[i] = std::sin(kTwoPi * fy * t);
        }
        for (int r = 0; r < n; ++r) {
            for (int col = 0; col < n; ++col) {
                acc[static_cast<std::size_t>(r) * n + col] += amp * (cx[col] * cy[r] - sx[col] * sy[r]);
            }
        }
    }

    // Class pattern: one cycle of a cosine across the image, varying along x
    // for class 0 and along y for class 1.
    const double signal_amp = spec.signal_strength * rng.normal(1.0, p.signal_jitter);
    if (spec.signal_strength != 0.0) {
        for (int i = 0; i < n; ++i) cx[i] = std::cos(kTwoPi * static_cast<double>(i) / n);
        for (int r = 0; r < n; ++r) {
            for (int col = 0; col < n; ++col) {
                const double pattern = spec.class_label == 0 ? cx[col] : cx[r];
                acc[static_cast<std::size_t>(r) * n + col] += signal_amp * pattern;
            }
        }
    }

    switch (spec.shortcut_kind) {
        case ShortcutKind::None:
            break;
        case ShortcutKind::CornerTag: {
            const int side = scaled_extent(p.tag_fraction, n);
            for (int r = 0; r < side; ++r) {
                for (int col = 0; col < side; ++col) acc[static_cast<std::size_t>(r) * n + col] += spec.shortcut_amplitude;
            }
            break;
        }
        case ShortcutKind::BorderFrame: {
            const int band = scaled_extent(p.border_fraction, n);
            const int block = p.checker_block;
            for (int r = 0; r < n; ++r) {
                for (int col = 0; col < n; ++col) {
                    const bool in_band = r < band || r >= n - band || col < band || col >= n - band;
                    if (!in_band) continue;
                    const bool even = ((r / block) + (col / block)) % 2 == 0;
                    acc[static_cast<std::size_t>(r) * n + col] += even ? spec.shortcut_amplitude : -spec.shortcut_amplitude;
                }
            }
            break;
        }
        case ShortcutKind::BrightnessOffset:
            for (double& v : acc) v += spec.shortcut_amplitude;
            break;
    }

    std::vector<float> pixels(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) pixels[i] = clip01(acc[i] + rng.normal(0.0, p.grain_std));
    return Image(n, n, std::move(pixels));
}

void check_counts(const SplitCounts::PerClass& c, const char* split) {
    for (int label = 0; label < 2; ++label) {
        if (c[label] < 1) {
            throw_invalid(std::string("split ") + split + " needs at least one image of class " +
                          std::to_string(label) + ", got " + std::to_string(c[label]));
        }
    }
}

std::array<Dataset, 2> pool_by_class(const std::vector<SourceSpec>& sources, const SynthParams& params) {
    std::array<Dataset, 2> pools;
    for (const SourceSpec& spec : sources) {
        for (LabeledImage& item : generate_source(spec, params)) {
            pools[static_cast<std::size_t>(item.label)].push_back(std::move(item));
        }
    }
    return pools;
}

void preprocess_all(Dataset& images, int target_size) {
    for (LabeledImage& item : images) item.image = preprocess(item.image, target_size);
}

void take(Dataset& pool, std::size_t& cursor, int count, Dataset& out) {
    for (int i = 0; i < count; ++i) out.push_back(std::move(pool[cursor++]));
}

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    std::size_t start = 0;
    while (start < s.size() && (s[start] == ' ' || s[start] == '\t')) ++start;
    return s.substr(start);
}

}  // namespace

std::string_view to_string(ShortcutKind kind) {
    switch (kind) {
        case ShortcutKind::None: return "none";
        case ShortcutKind::CornerTag: return "corner_tag";
        case ShortcutKind::BorderFrame: return "border_frame";
        case ShortcutKind::BrightnessOffset: return "brightness_offset";
    }
    return "unknown";
}

std::optional<ShortcutKind> parse_shortcut_kind(std::string_view name) {
    for (ShortcutKind k : {ShortcutKind::None, ShortcutKind::CornerTag, ShortcutKind::BorderFrame,
                           ShortcutKind::BrightnessOffset}) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

void SourceSpec::validate() const {
    const std::string who = "source '" + source_id + "'";
    if (source_id.empty()) throw_invalid("source_id must not be empty");
    if (class_label != 0 && class_label != 1) throw_invalid(who + ": class_label must be 0 or 1");
    if (n_images < 1) throw_invalid(who + ": n_images must be >= 1");
    require_unit(signal_strength, who + ": signal_strength");
    require_unit(shortcut_amplitude, who + ": shortcut_amplitude");
}

void SynthParams::validate() const {
    if (image_size < 4) throw_invalid("image_size must be >= 4");
    require_unit(background_level, "background_level");
    require_unit(background_amplitude, "background_amplitude");
    require_unit(grain_std, "grain_std");
    if (!(signal_jitter >= 0.0) || !std::isfinite(signal_jitter)) throw_invalid("signal_jitter must be >= 0");
    if (!(border_fraction > 0.0 && border_fraction <= 0.5)) throw_invalid("border_fraction must be in (0, 0.5]");
    if (!(tag_fraction > 0.0 && tag_fraction <= 1.0)) throw_invalid("tag_fraction must be in (0, 1]");
    if (checker_block < 1) throw_invalid("checker_block must be >= 1");
}

Dataset generate_source(const SourceSpec& spec, const SynthParams& params) {
    spec.validate();
    params.validate();
    RngStream rng(spec.base_seed);
    Dataset out;
    out.reserve(static_cast<std::size_t>(spec.n_images));
    for (int i = 0; i < spec.n_images; ++i) {
        out.push_back(LabeledImage{render_image(spec, params, rng), spec.class_label, spec.source_id});
    }
    return out;
}

ExperimentData make_raw_splits(const std::vector<SourceSpec>& id_sources,
                               const std::vector<SourceSpec>& ood_sources, const SplitCounts& counts,
                               std::uint64_t seed, const SynthParams& params) {
    check_counts(counts.train, "train");
    check_counts(counts.validation, "validation");
    check_counts(counts.id_test, "id_test");
    check_counts(counts.ood_test, "ood_test");

    std::set<std::string> seen;
    std::array<int, 2> id_avail{0, 0};
    std::array<int, 2> ood_avail{0, 0};
    for (const SourceSpec& s : id_sources) {
        s.validate();
        if (!seen.insert(s.source_id).second) throw_invalid("duplicate source_id '" + s.source_id + "'");
        id_avail[static_cast<std::size_t>(s.class_label)] += s.n_images;
    }
    for (const SourceSpec& s : ood_sources) {
        s.validate();
        if (!seen.insert(s.source_id).second) {
            throw_invalid("source_id '" + s.source_id + "' appears more than once (ID and OOD sources must be disjoint)");
        }
        ood_avail[static_cast<std::size_t>(s.class_label)] += s.n_images;
    }
    for (int label = 0; label < 2; ++label) {
        const auto l = static_cast<std::size_t>(label);
        if (id_avail[l] == 0) throw_invalid("class " + std::to_string(label) + " missing from ID sources");
        if (ood_avail[l] == 0) throw_invalid("class " + std::to_string(label) + " missing from OOD sources");
        const int id_need = counts.train[l] + counts.validation[l] + counts.id_test[l];
        if (id_need > id_avail[l]) {
            throw_invalid("infeasible counts: class " + std::to_string(label) + " needs " + std::to_string(id_need) +
                          " ID images, sources provide " + std::to_string(id_avail[l]));
        }
        if (counts.ood_test[l] > ood_avail[l]) {
            throw_invalid("infeasible counts: class " + std::to_string(label) + " needs " +
                          std::to_string(counts.ood_test[l]) + " OOD images, sources provide " +
                          std::to_string(ood_avail[l]));
        }
    }

    auto id_pools = pool_by_class(id_sources, params);
    auto ood_pools = pool_by_class(ood_sources, params);

    RngStream rng(seed);
    for (Dataset& pool : id_pools) rng.shuffle(pool.begin(), pool.end());
    for (Dataset& pool : ood_pools) rng.shuffle(pool.begin(), pool.end());

    ExperimentData data;
    for (std::size_t label = 0; label < 2; ++label) {
        std::size_t cursor = 0;
        take(id_pools[label], cursor, counts.train[label], data.train);
        take(id_pools[label], cursor, counts.validation[label], data.validation);
        take(id_pools[label], cursor, counts.id_test[label], data.id_test);
        std::size_t ood_cursor = 0;
        take(ood_pools[label], ood_cursor, counts.ood_test[label], data.ood_test);
    }
    return data;
}

ExperimentData make_splits(const std::vector<SourceSpec>& id_sources, const std::vector<SourceSpec>& ood_sources,
                           const SplitCounts& counts, std::uint64_t seed, const SynthParams& params,
                           int target_size) {
    if (target_size < 1) throw_invalid("target_size must be >= 1");
    ExperimentData data = make_raw_splits(id_sources, ood_sources, counts, seed, params);
    preprocess_all(data.train, target_size);
    preprocess_all(data.validation, target_size);
    preprocess_all(data.id_test, target_size);
    preprocess_all(data.ood_test, target_size);
    return data;
}

void preprocess_dataset(Dataset& images, int target_size) { preprocess_all(images, target_size); }

Image quantize_8bit(const Image& img) {
    Image out = img;
    for (float& s : out.pixels()) {
        const double level = std::floor(static_cast<double>(clip01(s)) * 255.0 + 1e-4);
        s = static_cast<float>(std::min(level, 255.0) / 255.0);
    }
    return out;
}

Image center_crop_square(const Image& img) {
    if (img.empty()) throw_invalid("center_crop_square: empty image");
    const int side = std::min(img.height(), img.width());
    if (side == img.height() && side == img.width()) return img;
    const int top = (img.height() - side) / 2;
    const int left = (img.width() - side) / 2;
    Image out(side, side);
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) out.at(r, c) = img.at(top + r, left + c);
    }
    return out;
}

Image resize_bilinear(const Image& img, int out_height, int out_width) {
    if (img.empty()) throw_invalid("resize_bilinear: empty image");
    if (out_height < 1 || out_width < 1) throw_invalid("resize_bilinear: target size must be >= 1");
    if (out_height == img.height() && out_width == img.width()) return img;
    Image out(out_height, out_width);
    const double sy = static_cast<double>(img.height()) / out_height;
    const double sx = static_cast<double>(img.width()) / out_width;
    auto source = [](int i, double scale, int limit, int& i0, int& i1, double& frac) {
        double pos = (i + 0.5) * scale - 0.5;
        pos = std::clamp(pos, 0.0, static_cast<double>(limit - 1));
        i0 = static_cast<int>(std::floor(pos));
        i1 = std::min(i0 + 1, limit - 1);
        frac = pos - i0;
    };
    for (int r = 0; r < out_height; ++r) {
        int r0 = 0, r1 = 0;
        double fr = 0.0;
        source(r, sy, img.height(), r0, r1, fr);
        for (int c = 0; c < out_width; ++c) {
            int c0 = 0, c1 = 0;
            double fc = 0.0;
            source(c, sx, img.width(), c0, c1, fc);
            const double top = img.at(r0, c0) * (1.0 - fc) + img.at(r0, c1) * fc;
            const double bottom = img.at(r1, c0) * (1.0 - fc) + img.at(r1, c1) * fc;
            out.at(r, c) = clip01(top * (1.0 - fr) + bottom * fr);
        }
    }
    return out;
}

Image preprocess(const Image& raw, int target_size) {
    if (target_size < 1) throw_invalid("preprocess: target_size must be >= 1, got " + std::to_string(target_size));
    if (raw.empty()) throw_invalid("preprocess: empty image");
    return resize_bilinear(quantize_8bit(center_crop_square(raw)), target_size, target_size);
}

Dataset load_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw_io("cannot open manifest " + manifest_path.string());
    std::string line;
    if (!std::getline(in, line)) throw_io("manifest " + manifest_path.string() + " is empty");
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line) != "path,label,source_id") {
        throw_io("manifest header must be exactly 'path,label,source_id', got '" + trim(line) + "'");
    }
    const auto base = manifest_path.parent_path();
    Dataset out;
    int row = 0;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        ++row;
        const std::string where = "manifest row " + std::to_string(row) + ": ";
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(trim(field));
        if (fields.size() != 3) throw_io(where + "expected 3 fields, got " + std::to_string(fields.size()));
        int label = -1;
        if (fields[1] == "0") label = 0;
        else if (fields[1] == "1") label = 1;
        else throw_io(where + "bad label '" + fields[1] + "' (must be 0 or 1)");
        std::filesystem::path path(fields[0]);
        if (path.is_relative()) path = base / path;
        if (!std::filesystem::exists(path)) throw_io(where + "missing file " + path.string());
        try {
            out.push_back(LabeledImage{read_pgm(path), label, fields[2]});
        } catch (const Error& e) {
            throw Error(e.kind(), where + e.what());
        }
    }
    return out;
}

void write_manifest(const std::filesystem::path& dir, const std::string& stem, const Dataset& images) {
    std::filesystem::create_directories(dir / stem);
    std::ofstream csv(dir / (stem + ".csv"));
    if (!csv) throw_io("cannot write manifest in " + dir.string());
    csv << "path,label,source_id\n";
    for (std::size_t i = 0; i < images.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%05zu.pgm", i);
        const std::string rel = stem + "/" + name;
        write_pgm(dir / rel, images[i].image);
        csv << rel << ',' << images[i].label << ',' << images[i].source_id << '\n';
    }
    if (!csv) throw_io("failed writing manifest " + (dir / (stem + ".csv")).string());
}

}  // namespace noisy_ood

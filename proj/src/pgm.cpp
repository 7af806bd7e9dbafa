#include "noisy_ood/pgm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "noisy_ood/error.hpp"

namespace noisy_ood {

namespace {

// Skips whitespace and '#' comments between header tokens.
void skip_separators(std::istream& in) {
    for (;;) {
        const int c = in.peek();
        if (c == '#') {
            in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
        } else if (c != std::char_traits<char>::eof() && std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

long read_header_int(std::istream& in, const char* field) {
    skip_separators(in);
    long value = -1;
    if (!(in >> value) || value < 0) throw_io(std::string("malformed PGM header: bad ") + field);
    return value;
}

}  // namespace

Image read_pgm(std::istream& in) {
    char magic[2] = {0, 0};
    if (!in.read(magic, 2) || magic[0] != 'P' || magic[1] != '5') {
        throw_io("malformed PGM header: expected P5 magic");
    }
    const long width = read_header_int(in, "width");
    const long height = read_header_int(in, "height");
    const long maxval = read_header_int(in, "maxval");
    if (width < 1 || height < 1) throw_io("malformed PGM header: zero dimension");
    if (maxval != 255) {
        throw_io("unsupported bit depth: maxval " + std::to_string(maxval) + " (only 255 is accepted)");
    }
    // Exactly one whitespace byte separates the header from the raster.
    if (!std::isspace(in.get())) throw_io("malformed PGM header: missing raster separator");

    const auto count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::vector<unsigned char> raw(count);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count))) {
        throw_io("truncated PGM raster: expected " + std::to_string(count) + " bytes");
    }
    std::vector<float> pixels(count);
    for (std::size_t i = 0; i < count; ++i) pixels[i] = static_cast<float>(raw[i]) / 255.0f;
    return Image(static_cast<int>(height), static_cast<int>(width), std::move(pixels));
}

Image read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open " + path.string());
    return read_pgm(in);
}

void write_pgm(std::ostream& out, const Image& img) {
    if (img.empty()) throw_invalid("write_pgm: empty image");
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    std::vector<unsigned char> raw(img.size());
    const auto px = img.pixels();
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double v = std::lround(static_cast<double>(clip01(px[i])) * 255.0);
        raw[i] = static_cast<unsigned char>(v);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw_io("failed writing PGM raster");
}

void write_pgm(const std::filesystem::path& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot open " + path.string() + " for writing");
    write_pgm(out, img);
}

}  // namespace noisy_ood

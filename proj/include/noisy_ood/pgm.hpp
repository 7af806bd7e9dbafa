#pragma once

#include <filesystem>
#include <iosfwd>

#include "noisy_ood/image.hpp"

namespace noisy_ood {

// Binary PGM (P5) with maxval 255. Bytes map to samples as b / 255; samples
// map back to bytes as round(s * 255).

Image read_pgm(std::istream& in);
Image read_pgm(const std::filesystem::path& path);

void write_pgm(std::ostream& out, const Image& img);
void write_pgm(const std::filesystem::path& path, const Image& img);

}  // namespace noisy_ood

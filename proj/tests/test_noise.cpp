#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "noisy_ood/error.hpp"
#include "noisy_ood/noise.hpp"
#include "oracles.hpp"

using namespace noisy_ood;

namespace {

constexpr int kSide = 1000;  // 1e6 pixels

std::vector<double> deltas(const Image& in, const Image& out) {
    std::vector<double> d(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) d[i] = static_cast<double>(out.pixels()[i]) - in.pixels()[i];
    return d;
}

Image ramp(int h, int w) {
    Image img(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) img.at(r, c) = static_cast<float>((r * w + c) % 256) / 255.0f;
    return img;
}

}  // namespace

TEST_CASE("rng streams are reproducible and sub-streams differ") {
    RngStream a(42), b(42), c(42 ^ kNoiseStreamTag);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        CHECK(x != c.next_u64());
    }
    RngStream u(5);
    for (int i = 0; i < 10000; ++i) {
        const auto k = u.uniform_index(7);
        CHECK(k < 7);
        const double x = u.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("poisson sampler matches mean and variance on both branches") {
    for (double lambda : {0.5, 4.0, 30.0, 127.5, 5000.0}) {
        RngStream rng(9);
        std::vector<double> xs(200000);
        for (double& x : xs) x = static_cast<double>(rng.poisson(lambda));
        const auto m = oracle::moments(xs);
        const double se = std::sqrt(lambda / xs.size());
        CHECK(std::fabs(static_cast<double>(m.mean) - lambda) < 5 * se);
        CHECK(std::fabs(static_cast<double>(m.variance) / lambda - 1.0) < 0.03);
    }
    RngStream rng(1);
    CHECK(rng.poisson(0.0) == 0);
}

TEST_CASE("gaussian noise moments on a constant image") {
    const Image img(kSide, kSide, 0.5f);
    RngStream rng(123);
    const auto out = apply_gaussian(img, 0.0, 0.01, rng);
    const auto m = oracle::moments(deltas(img, out));
    CHECK(std::fabs(static_cast<double>(m.mean)) <= 0.001);
    CHECK(std::fabs(static_cast<double>(m.variance) / 0.01 - 1.0) <= 0.02);
}

TEST_CASE("gaussian with zero variance is the identity") {
    const Image img = ramp(17, 23);
    RngStream rng(1);
    CHECK(apply_gaussian(img, 0.0, 0.0, rng) == img);
}

TEST_CASE("speckle noise std scales with the intensity") {
    const Image img(kSide, kSide, 0.5f);
    RngStream rng(77);
    const auto m = oracle::moments(deltas(img, apply_speckle(img, 0.01, rng)));
    CHECK(std::fabs(std::sqrt(static_cast<double>(m.variance)) / 0.05 - 1.0) <= 0.02);

    RngStream r2(3);
    const Image zeros(31, 29, 0.0f);
    CHECK(apply_speckle(zeros, 0.3, r2) == zeros);
    const Image any = ramp(12, 12);
    CHECK(apply_speckle(any, 0.0, r2) == any);
}

TEST_CASE("salt and pepper counts follow the binomial expectation") {
    const Image img(224, 224, 0.5f);
    RngStream rng(2024);
    const auto out = apply_salt_pepper(img, 0.05, 0.5, rng);
    int corrupted = 0, salt = 0;
    for (float v : out.pixels()) {
        if (v != 0.5f) {
            ++corrupted;
            CHECK((v == 0.0f || v == 1.0f));
            if (v == 1.0f) ++salt;
        }
    }
    const double n = 224.0 * 224.0;
    const double expected = n * 0.05;
    CHECK(expected == doctest::Approx(2508.8));
    const double sd = std::sqrt(n * 0.05 * 0.95);
    CHECK(std::fabs(corrupted - expected) <= 4 * sd);
    const double frac = static_cast<double>(salt) / corrupted;
    CHECK(std::fabs(frac - 0.5) <= 4 * std::sqrt(0.25 / corrupted));

    RngStream r2(1);
    CHECK(apply_salt_pepper(img, 0.0, 0.5, r2) == img);
    const auto all_salt = apply_salt_pepper(img, 1.0, 1.0, r2);
    for (float v : all_salt.pixels()) CHECK(v == 1.0f);
}

TEST_CASE("poisson shot noise moments") {
    const Image img(kSide, kSide, 0.5f);
    RngStream rng(555);
    const auto out = apply_poisson(img, 255.0, rng);
    std::vector<double> vals(out.pixels().begin(), out.pixels().end());
    const auto m = oracle::moments(vals);
    CHECK(std::fabs(static_cast<double>(m.mean) - 0.5) <= 0.002);
    const double expected_var = 0.5 / 255.0;
    CHECK(std::fabs(static_cast<double>(m.variance) / expected_var - 1.0) <= 0.05);

    RngStream r2(8);
    const Image zeros(40, 40, 0.0f);
    CHECK(apply_poisson(zeros, 255.0, r2) == zeros);

    const Image half(200, 200, 0.5f);
    const auto fine = apply_poisson(half, 1e9, r2);
    for (float v : fine.pixels()) CHECK(std::fabs(v - 0.5f) <= 1e-3);
}

TEST_CASE("augment draws kinds uniformly and never returns the clean image") {
    NoisePolicy only_gauss;
    only_gauss.enabled_kinds = {NoiseKind::Gaussian};
    const Image img(4, 4, 0.5f);
    RngStream rng(10);
    for (int i = 0; i < 100; ++i) CHECK(augment(img, only_gauss, rng).second == NoiseKind::Gaussian);

    NoisePolicy all;
    std::array<int, 4> counts{};
    const int draws = 40000;
    const Image tiny(2, 2, 0.5f);
    for (int i = 0; i < draws; ++i) counts[static_cast<int>(augment(tiny, all, rng).second)]++;
    const double sd = std::sqrt(0.25 * 0.75 / draws);
    for (int c : counts) CHECK(std::fabs(static_cast<double>(c) / draws - 0.25) <= 4 * sd);
}

TEST_CASE("noise operators are deterministic for a fixed seed") {
    const Image img = ramp(20, 30);
    NoisePolicy p;
    for (NoiseKind k : kAllNoiseKinds) {
        RngStream a(99), b(99);
        CHECK(apply_noise(img, k, p, a) == apply_noise(img, k, p, b));
    }
    RngStream a(4), b(4);
    const auto x = augment(img, p, a);
    const auto y = augment(img, p, b);
    CHECK(x.first == y.first);
    CHECK(x.second == y.second);
}

TEST_CASE("noise kind names round-trip") {
    for (NoiseKind k : kAllNoiseKinds) CHECK(parse_noise_kind(to_string(k)) == k);
    CHECK_FALSE(parse_noise_kind("uniform").has_value());
    CHECK(to_string(NoiseKind::SaltPepper) == "salt_pepper");
}

TEST_CASE("invalid noise parameters are rejected") {
    const Image img(4, 4, 0.5f);
    RngStream rng(1);
    CHECK_THROWS_AS(apply_gaussian(img, 0.0, -0.1, rng), Error);
    CHECK_THROWS_AS(apply_speckle(img, std::nan(""), rng), Error);
    CHECK_THROWS_AS(apply_salt_pepper(img, 1.5, 0.5, rng), Error);
    CHECK_THROWS_AS(apply_salt_pepper(img, 0.5, -0.1, rng), Error);
    CHECK_THROWS_AS(apply_poisson(img, 0.0, rng), Error);
    NoisePolicy p;
    p.enabled_kinds.clear();
    CHECK_THROWS_AS(p.validate(), Error);
    CHECK_THROWS_AS(augment(img, p, rng), Error);
}

TEST_CASE("fuzz: outputs keep shape, stay in range, and are reproducible") {
    RngStream meta(31337);
    NoisePolicy base;
    for (int trial = 0; trial < 1000; ++trial) {
        const int h = 1 + static_cast<int>(meta.uniform_index(16));
        const int w = 1 + static_cast<int>(meta.uniform_index(16));
        Image img(h, w);
        for (float& v : img.pixels()) v = static_cast<float>(meta.uniform());
        NoisePolicy p = base;
        p.gaussian_mean = meta.uniform() * 0.4 - 0.2;
        p.gaussian_variance = meta.uniform() * 0.5;
        p.speckle_variance = meta.uniform() * 0.5;
        p.sp_density = meta.uniform();
        p.sp_salt_ratio = meta.uniform();
        p.poisson_scale = std::pow(10.0, meta.uniform() * 6.0 - 1.0);
        const std::uint64_t seed = meta.next_u64();
        RngStream a(seed), b(seed);
        const auto x = augment(img, p, a);
        const auto y = augment(img, p, b);
        REQUIRE(x.first.same_shape(img));
        REQUIRE(x.first.in_unit_range());
        REQUIRE(x.first == y.first);
        REQUIRE(x.second == y.second);
    }
}

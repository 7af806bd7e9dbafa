#pragma once

#include <cstdint>
#include <random>

namespace noisy_ood {

// Sub-stream derivation for one experiment run. Every source of randomness in
// a run is keyed off the run seed XOR one of these tags, so the baseline and
// noise-augmented conditions at the same seed see identical data splits.
inline constexpr std::uint64_t kDataStreamTag = 1;
inline constexpr std::uint64_t kShuffleStreamTag = 2;
inline constexpr std::uint64_t kNoiseStreamTag = 3;

/// Seedable random stream with fully specified sampling algorithms.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are implementation-defined, so every
/// transform used here is written out explicitly:
///   - uniform():  top 53 bits of one engine draw, scaled to [0, 1)
///   - normal():   Marsaglia polar method, second deviate cached
///   - poisson():  Knuth's product method for mean < 10, Hormann's PTRS
///                 transformed rejection otherwise
/// A given seed therefore yields the same samples on every platform.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t draws() const noexcept { return draws_; }

    std::uint64_t next_u64() {
        ++draws_;
        return engine_();
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n), n > 0, by rejection (no modulo bias).
    std::uint64_t uniform_index(std::uint64_t n);

    /// Standard normal deviate.
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Poisson deviate with the given mean (mean >= 0).
    std::uint64_t poisson(double mean);

    /// Fisher-Yates shuffle driven by uniform_index.
    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const auto j = uniform_index(i);
            std::swap(first[static_cast<std::ptrdiff_t>(i - 1)], first[static_cast<std::ptrdiff_t>(j)]);
        }
    }

private:
    std::uint64_t poisson_ptrs(double mean);

    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::uint64_t draws_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace noisy_ood

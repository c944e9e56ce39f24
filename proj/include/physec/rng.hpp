#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <vector>

#include "physec/hash.hpp"

namespace physec {

// Deterministic RNG. The mt19937_64 engine is fully specified by the
// standard; Gaussian draws go through our own Box-Muller rather than
// std::normal_distribution (whose algorithm is implementation-defined), so a
// (seed, draw-sequence) pair pins every sample.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    uint32_t next_u32() { return static_cast<uint32_t>(engine_() >> 32); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) {
        // rejection sampling keeps the draw unbiased
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller; the spare sample is cached.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Circularly symmetric complex Gaussian, E[|z|^2] = 1.
    std::complex<double> complex_gaussian() {
        const double s = std::numbers::sqrt2 / 2.0;
        const double re = gaussian() * s;
        const double im = gaussian() * s;
        return {re, im};
    }

    std::vector<uint8_t> bytes(std::size_t n) {
        std::vector<uint8_t> out(n);
        for (auto& b : out) b = static_cast<uint8_t>(engine_() >> 56);
        return out;
    }

    template <std::size_t N>
    std::array<uint8_t, N> byte_array() {
        std::array<uint8_t, N> out{};
        for (auto& b : out) b = static_cast<uint8_t>(engine_() >> 56);
        return out;
    }

    uint8_t bit() { return static_cast<uint8_t>(engine_() >> 63); }

    BitVec bitvec(std::size_t n) {
        BitVec v;
        for (std::size_t i = 0; i < n; ++i) v.push_back(bit());
        return v;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Counter-based stream splitting: trial seeds are hashes of the master seed
// and the trial index, so parallel and serial execution agree.
inline uint64_t derive_seed(uint64_t master, uint64_t index, std::string_view label = "") {
    const auto m = be64(master);
    const auto i = be64(index);
    const Digest256 d = sha256({std::span<const uint8_t>(m), as_bytes(label),
                                std::span<const uint8_t>(i)});
    uint64_t out = 0;
    for (int k = 0; k < 8; ++k) out = (out << 8) | d[static_cast<std::size_t>(k)];
    return out;
}

} // namespace physec

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fbq {

// Finalizer from SplitMix64; used only to derive well-separated stream keys.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seeded random stream. Streams are identified by a 64-bit key; split(k)
// derives an independent child stream deterministically, so parallel
// replications never share state and results do not depend on thread count.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL))), engine_(key_) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    Rng split(std::uint64_t child) const { return Rng(key_, child); }

    // Uniform on the open interval (0,1); safe under log().
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    double normal() {
        // Box-Muller; the second variate is discarded to keep the stream stateless.
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_;
    std::mt19937_64 engine_;
};

}  // namespace fbq

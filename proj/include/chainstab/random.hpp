#pragma once

#include <cstdint>

namespace chainstab {

/// SplitMix64 finalizer. Used as a counter-based hash so that random
/// disturbance values can be looked up by (seed, axis, mesh index) without
/// carrying generator state.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Maps 64 random bits to [0, 1) with 53 bits of mantissa.
constexpr double unit_from_bits(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

constexpr std::uint64_t stream_seed(std::uint64_t base, std::uint64_t stream) {
    return mix64(base ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

/// Small sequential generator on top of mix64; portable across standard
/// libraries, unlike std::uniform_real_distribution.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    double uniform() { return unit_from_bits(next()); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double normal();

private:
    std::uint64_t state_;
};

}  // namespace chainstab

#pragma once

#include <cstdint>

namespace fairim {

// SplitMix64 finalizer (Steele, Lea, Vigna). Used both as a sequential
// generator and as a counter-based hash: the i-th output of a stream seeded
// with s equals derive_seed(s, i), so sub-streams can be addressed directly
// without iterating. This keeps rollouts and per-edge coins order-independent.
inline constexpr std::uint64_t kSplitMixGamma = 0x9E3779B97F4A7C15ULL;

inline constexpr std::uint64_t splitmix_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix_mix(seed + (index + 1) * kSplitMixGamma);
}

// Maps a 64-bit word to [0,1) by dividing by 2^64. The top of the range can
// round to 1.0 in double precision; Bernoulli trials guard p >= 1 explicitly.
inline constexpr double to_unit(std::uint64_t u) {
    return static_cast<double>(u) * 0x1.0p-64;
}

class SplitMix64 {
  public:
    explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

    constexpr std::uint64_t next() {
        state_ += kSplitMixGamma;
        return splitmix_mix(state_);
    }

    constexpr double next_unit() { return to_unit(next()); }

    // true with probability p; always consumes one draw so streams stay aligned
    constexpr bool bernoulli(double p) {
        const double u = next_unit();
        return p >= 1.0 || u < p;
    }

    // uniform index in [0, n); n must be positive
    constexpr std::uint64_t next_index(std::uint64_t n) {
        const auto idx = static_cast<std::uint64_t>(next_unit() * static_cast<double>(n));
        return idx >= n ? n - 1 : idx;
    }

    constexpr std::uint64_t state() const { return state_; }

  private:
    std::uint64_t state_;
};

// Deterministic Fisher-Yates shuffle driven by the portable generator.
template <typename Container>
void shuffle(Container& items, SplitMix64& rng) {
    const std::uint64_t n = items.size();
    for (std::uint64_t i = n; i > 1; --i) {
        const std::uint64_t j = rng.next_index(i);
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

}  // namespace fairim

#pragma once

#include <cstdint>

namespace trafficast {

/// splitmix64: advances `state` and returns the next output word. Used only
/// to seed the main generator and to derive per-stream seeds.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/**
 * xoshiro256++ pseudo-random generator (Blackman & Vigna). Chosen over the
 * platform default engines because its output is fixed by the algorithm, so
 * seeded runs are reproducible across compilers and standard libraries.
 *
 * Stream splitting: for_stream(seed, stream) derives an independent
 * generator for each (seed, stream) pair by folding the stream index into
 * the splitmix64 seeding chain. The simulator gives every tick its own
 * stream so the draws for tick t do not depend on how many variates earlier
 * ticks consumed.
 */
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) {
            word = splitmix64_next(sm);
        }
    }

    static Xoshiro256pp for_stream(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t sm = seed;
        std::uint64_t folded = splitmix64_next(sm) ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
        return Xoshiro256pp(folded);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform draw on (0, 1]: 53 random bits mapped to the open-below unit
    /// interval, so ln(u) and u^(1/a) are always finite.
    double uniform() {
        return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    }

    std::uint64_t operator()() { return next(); }
    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~0ULL; }

private:
    static std::uint64_t rotl(std::uint64_t x, int s) {
        return (x << s) | (x >> (64 - s));
    }

    std::uint64_t state_[4];
};

}  // namespace trafficast

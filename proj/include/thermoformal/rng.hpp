#pragma once
#include <cstdint>
#include <cmath>

namespace tf {

// Counter-based generator built on the splitmix64 finalizer. Every value is a
// pure function of (seed, stream, index), so sampling order and thread count
// never change the output.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct Rng {
    uint64_t key;

    Rng(uint64_t seed, uint64_t stream)
        : key(splitmix64(splitmix64(seed) ^ (stream * 0x9e3779b97f4a7c15ULL))) {}

    uint64_t bits(uint64_t i) const {
        return splitmix64(key + i * 0x9e3779b97f4a7c15ULL);
    }
    // uniform in [0,1) with 53 random bits
    double uniform(uint64_t i) const {
        return (bits(i) >> 11) * 0x1.0p-53;
    }
    // uniform integer in [0, n)
    uint64_t below(uint64_t i, uint64_t n) const {
        return (uint64_t)(uniform(i) * (double)n) % n;
    }
};

// sequential convenience cursor over an Rng
struct RngCursor {
    Rng rng;
    uint64_t ctr = 0;
    RngCursor(uint64_t seed, uint64_t stream) : rng(seed, stream) {}
    double uniform() { return rng.uniform(ctr++); }
    uint64_t bits() { return rng.bits(ctr++); }
    uint64_t below(uint64_t n) { return rng.below(ctr++, n); }
};

// fixed stream ids so independent samplers never collide
enum : uint64_t {
    STREAM_ATTRACTOR = 1,
    STREAM_CHAINS = 2,
    STREAM_SEGMENTS_G = 3,
    STREAM_SEGMENTS_S = 4,
    STREAM_GLUE = 5,
    STREAM_LEMMA = 6,
    STREAM_BOWEN = 7,
    STREAM_NE = 8,
    STREAM_SRB = 9,
    STREAM_SUP = 10,
    STREAM_BACKWARD = 11,
    STREAM_SEP = 12,
};

} // namespace tf

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace asep {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256** keyed by (seed, stream_id). Streams are derived by hashing the pair
// through splitmix64, so replica i never depends on how many draws replica i-1 made.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0) : seed_(seed), stream_(stream_id) {
        std::uint64_t k = seed ^ (0xd1b54a32d192ed03ULL * (stream_id + 1));
        std::uint64_t h = splitmix64(k);
        h ^= stream_id * 0x9e3779b97f4a7c15ULL;
        for (auto& w : s_) w = splitmix64(h);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // (0,1], never returns 0 so -log(u) is finite
    double uniform_open() { return (double((*this)() >> 11) + 1.0) * 0x1.0p-53; }
    double uniform() { return double((*this)() >> 11) * 0x1.0p-53; }
    double exponential(double rate) { return -std::log(uniform_open()) / rate; }

    // Lemire's nearly-divisionless bounded draw
    std::uint64_t below(std::uint64_t n) {
        __uint128_t m = __uint128_t((*this)()) * n;
        auto lo = std::uint64_t(m);
        if (lo < n) {
            const std::uint64_t thresh = (0 - n) % n;
            while (lo < thresh) {
                m = __uint128_t((*this)()) * n;
                lo = std::uint64_t(m);
            }
        }
        return std::uint64_t(m >> 64);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
    std::uint64_t seed_, stream_;
};

}  // namespace asep

#ifndef MFHAWKES_RNG_HPP
#define MFHAWKES_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>

namespace mfhawkes {

/// One SplitMix64 step; advances `state`.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stateless 64-bit mix of two words, used to key streams by (seed, index).
constexpr std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t s = a ^ (0x632be59bd9b4e019ULL + (b << 6) + (b >> 2));
    splitmix64(s);
    s ^= b * 0xd6e8feb86659fd93ULL;
    return splitmix64(s);
}

/// xoshiro256++. Satisfies UniformRandomBitGenerator. The library draws
/// variates with its own helpers below rather than <random> distributions,
/// whose outputs differ between standard libraries.
class Rng {
    __extension__ using Wide = unsigned __int128;

public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& w : s_) {
            w = splitmix64(sm);
        }
    }

    /// Independent stream for replicate `index` of a run seeded with `seed`.
    static Rng stream(std::uint64_t seed, std::uint64_t index) noexcept { return Rng(mix_key(seed, index)); }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Exp(rate) variate.
    double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

    /// Uniform integer in [0, n), n > 0 (Lemire's nearly-divisionless method).
    std::uint64_t below(std::uint64_t n) noexcept {
        Wide m = static_cast<Wide>((*this)()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<Wide>((*this)()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4]{};
};

}  // namespace mfhawkes

#endif  // MFHAWKES_RNG_HPP

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace mfito {

/// Philox-4x32-10 counter-based generator (Salmon et al., SC'11).
/// Output is a pure function of (key, counter): no hidden state, so any
/// draw can be regenerated independently of scheduling.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter generate(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            ctr = single_round(ctr, key);
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static constexpr Counter single_round(const Counter& c, const Key& k) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// Substream purposes. Each (purpose, entity) pair owns a disjoint
/// counter range under the master seed.
enum class Purpose : std::uint32_t {
    common_brownian = 1,
    common_bridge = 2,
    common_proposals = 3,
    particle_brownian = 4,
    particle_jumps = 5,
    copy_brownian = 6,
    copy_jumps = 7,
    generator = 8,
    chain_sampling = 9,
};

/// Uniform on the open interval (0,1) from two 32-bit words (52 bits).
constexpr double uniform_open(std::uint32_t a, std::uint32_t b) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(a >> 6) << 26) | (b >> 6);
    return (static_cast<double>(bits) + 0.5) * (1.0 / 4503599627370496.0);
}

/// Uniform on (0,1) from a single 32-bit word.
constexpr double uniform_open(std::uint32_t a) {
    return (static_cast<double>(a) + 0.5) * (1.0 / 4294967296.0);
}

/// Counter-based random source keyed by a master seed.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    constexpr Philox4x32::Counter block(Purpose purpose, std::uint32_t entity,
                                        std::uint64_t index) const {
        return Philox4x32::generate({static_cast<std::uint32_t>(index),
                                     static_cast<std::uint32_t>(index >> 32), entity,
                                     static_cast<std::uint32_t>(purpose)},
                                    key_);
    }

    double uniform(Purpose purpose, std::uint32_t entity, std::uint64_t index) const {
        const auto b = block(purpose, entity, index);
        return uniform_open(b[0], b[1]);
    }

    /// Standard normal via Box-Muller on one block.
    double normal(Purpose purpose, std::uint32_t entity, std::uint64_t index) const {
        const auto b = block(purpose, entity, index);
        const double u1 = uniform_open(b[0], b[1]);
        const double u2 = uniform_open(b[2], b[3]);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    Philox4x32::Key key_;
};

/// Sequential view over one substream; convenient for generators that
/// draw a variable number of values.
class Stream {
public:
    Stream(const CounterRng& rng, Purpose purpose, std::uint32_t entity)
        : rng_(rng), purpose_(purpose), entity_(entity) {}

    double uniform() { return rng_.uniform(purpose_, entity_, next_++); }
    double normal() { return rng_.normal(purpose_, entity_, next_++); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double exponential(double rate) { return -std::log(uniform()) / rate; }
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        const auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return k < n ? k : n - 1;
    }

private:
    CounterRng rng_;
    Purpose purpose_;
    std::uint32_t entity_;
    std::uint64_t next_ = 0;
};

}  // namespace mfito

#include "catch_amalgamated.hpp"

#include <cmath>
#include <vector>

#include "mfito/random.hpp"
#include "mfito/summation.hpp"

using mfito::Philox4x32;

TEST_CASE("philox known-answer vectors") {
    constexpr auto zero = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
    STATIC_REQUIRE(zero[0] == 0x6627e8d5u);
    STATIC_REQUIRE(zero[1] == 0xe169c58du);
    STATIC_REQUIRE(zero[2] == 0xbc57ac4cu);
    STATIC_REQUIRE(zero[3] == 0x9b00dbd8u);

    const auto ones = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                           {0xffffffffu, 0xffffffffu});
    CHECK(ones == Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});

    const auto pi = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                         {0xa4093822u, 0x299f31d0u});
    CHECK(pi == Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("counter rng is a pure function of its arguments") {
    const mfito::CounterRng a(42);
    const mfito::CounterRng b(42);
    const mfito::CounterRng c(43);
    using P = mfito::Purpose;
    CHECK(a.uniform(P::particle_brownian, 7, 99) == b.uniform(P::particle_brownian, 7, 99));
    CHECK(a.uniform(P::particle_brownian, 7, 99) != c.uniform(P::particle_brownian, 7, 99));
    CHECK(a.uniform(P::particle_brownian, 7, 99) != a.uniform(P::copy_brownian, 7, 99));
    CHECK(a.uniform(P::particle_brownian, 7, 99) != a.uniform(P::particle_brownian, 8, 99));
}

TEST_CASE("uniforms stay inside the open unit interval") {
    CHECK(mfito::uniform_open(0u, 0u) > 0.0);
    CHECK(mfito::uniform_open(0xffffffffu, 0xffffffffu) < 1.0);
    CHECK(mfito::uniform_open(0u) > 0.0);
    CHECK(mfito::uniform_open(0xffffffffu) < 1.0);
}

TEST_CASE("normal draws have unit variance") {
    const mfito::CounterRng rng(2024);
    const std::size_t n = 200000;
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = rng.normal(mfito::Purpose::generator, 0, i);
    const auto st = mfito::sample_stats(z);
    CHECK(std::abs(st.mean) < 5.0 / std::sqrt(double(n)));
    CHECK(std::abs(st.sd - 1.0) < 5.0 * std::sqrt(0.5 / double(n)));
}

TEST_CASE("stream exponential mean") {
    mfito::Stream s(mfito::CounterRng(5), mfito::Purpose::generator, 3);
    const std::size_t n = 100000;
    std::vector<double> e(n);
    for (auto& v : e) v = s.exponential(2.0);
    CHECK(std::abs(mfito::pairwise_mean(e) - 0.5) < 5.0 * 0.5 / std::sqrt(double(n)));
}

TEST_CASE("pairwise sum is order-stable and accurate") {
    std::vector<double> xs(1000, 0.1);
    CHECK(std::abs(mfito::pairwise_sum(xs) - 100.0) < 1e-12);
    CHECK(mfito::pairwise_sum(std::vector<double>{}) == 0.0);
}

#include "catch_amalgamated.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "mfito/generators.hpp"
#include "mfito/measure.hpp"
#include "mfito/oracles.hpp"

using namespace mfito;

namespace {
EmpiricalMeasure U(std::vector<double> xs) { return EmpiricalMeasure::uniform(xs); }
}  // namespace

TEST_CASE("moments") {
    CHECK(moment(U({0, 2}), 1) == 1.0);
    CHECK(moment(U({0, 2}), 2) == 2.0);
    CHECK(moment(U({1, 2, 3}), 1) == Catch::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS(moment(U({1}), -1), PreconditionError);
    CHECK(U({0, 2}).second_moment() == 2.0);
}

TEST_CASE("canonical form") {
    CHECK(U({3, 1, 2}) == U({1, 2, 3}));
    CHECK(U({3, 1, 2}).atoms()[0].location == 1.0);
    CHECK_THROWS_AS(EmpiricalMeasure(Space::real, {{0.0, 0.5, false}}), PreconditionError);
    CHECK_THROWS_AS(EmpiricalMeasure(Space::real, {{0.0, -0.5, false}, {1.0, 1.5, false}}), PreconditionError);
    CHECK_THROWS_AS(EmpiricalMeasure(Space::real, {{NAN, 1.0, false}}), PreconditionError);
    CHECK(U({1.0, 1.0 + 1e-13}).size() == 1);
    const std::vector<double> xs{0.0, 0.0};
    const auto s = EmpiricalMeasure::uniform_flagged(xs, {true, false});
    CHECK(s.size() == 2);
    CHECK(s.atoms()[0].alive == false);
    CHECK(s.flag_mass(true) == 0.5);
}

TEST_CASE("wasserstein spec cases") {
    CHECK(wasserstein(EmpiricalMeasure::dirac(0), EmpiricalMeasure::dirac(1), 2) == 1.0);
    CHECK(wasserstein(U({0, 2}), U({1, 3}), 2) == Catch::Approx(1.0).epsilon(1e-15));
    const std::vector<double> xs{0.0};
    const auto alive = EmpiricalMeasure::uniform_flagged(xs, {true});
    const auto dead = EmpiricalMeasure::uniform_flagged(xs, {false});
    CHECK(wasserstein(alive, dead, 2) == Catch::Approx(1.0));
    CHECK_THROWS_AS(wasserstein(alive, U({0}), 2), PreconditionError);
}

TEST_CASE("sorted coupling matches the assignment oracle") {
    Stream s(CounterRng(11), Purpose::generator, 0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(5), b(5);
        for (auto& v : a) v = s.uniform(-3, 3);
        for (auto& v : b) v = s.uniform(-3, 3);
        for (int p : {1, 2})
            CHECK(std::abs(wasserstein(U(a), U(b), p) - oracle::assignment_wasserstein(a, b, p)) < 1e-12);
    }
}

TEST_CASE("metric properties on random measures") {
    Stream s(CounterRng(12), Purpose::generator, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = random_measure(s, 1 + s.index(7), -2, 2, false);
        const auto b = random_measure(s, 1 + s.index(7), -2, 2, false);
        const auto c = random_measure(s, 1 + s.index(7), -2, 2, false);
        CHECK(wasserstein(a, a, 2) == 0.0);
        CHECK(wasserstein(a, b, 2) == Catch::Approx(wasserstein(b, a, 2)).margin(1e-14));
        CHECK(wasserstein(a, c, 2) <= wasserstein(a, b, 2) + wasserstein(b, c, 2) + 1e-10);
        CHECK(wasserstein(a, b, 1) <= wasserstein(a, b, 2) + 1e-12);
        const double lam = s.uniform();
        CHECK(std::abs(mean(mix(a, b, lam)) - ((1 - lam) * mean(a) + lam * mean(b))) < 1e-13);
    }
}

TEST_CASE("flagged transport agrees with sorted coupling when flags agree") {
    Stream s(CounterRng(13), Purpose::generator, 0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a(4), b(4);
        for (auto& v : a) v = s.uniform(-1, 1);
        for (auto& v : b) v = s.uniform(-1, 1);
        const std::vector<bool> flags(4, true);
        const auto fa = EmpiricalMeasure::uniform_flagged(a, flags);
        const auto fb = EmpiricalMeasure::uniform_flagged(b, flags);
        CHECK(std::abs(wasserstein(fa, fb, 2) - wasserstein(U(a), U(b), 2)) < 1e-12);
    }
}

TEST_CASE("mix") {
    const auto a = U({0, 1});
    const auto b = U({5});
    CHECK(mix(a, b, 0.0) == a);
    CHECK(mix(a, b, 1.0) == b);
    CHECK(mix(EmpiricalMeasure::dirac(0), EmpiricalMeasure::dirac(1), 0.5) == U({0, 1}));
    CHECK_THROWS_AS(mix(a, b, 1.5), PreconditionError);
    CHECK_THROWS_AS(mix(a, b, -0.1), PreconditionError);
}

TEST_CASE("pushforward") {
    const auto m = U({0, 2});
    CHECK(pushforward(m, [](double x) { return x; }) == m);
    CHECK(pushforward(m, [](double x) { return x + 1; }) == U({1, 3}));
    CHECK(pushforward(U({-1, 1}), [](double x) { return x * x; }) == EmpiricalMeasure::dirac(1));
}

TEST_CASE("csv round trip") {
    const std::vector<double> xs{0.1, 0.7, 0.7};
    const auto m = EmpiricalMeasure::uniform_flagged(xs, {true, false, true});
    std::stringstream ss;
    write_csv(ss, m);
    CHECK(read_csv(ss) == m);
}

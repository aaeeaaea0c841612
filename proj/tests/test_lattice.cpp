#include "catch_amalgamated.hpp"

#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "mfito/lattice.hpp"
#include "mfito/ordering.hpp"

using namespace mfito;

namespace {
std::uint64_t choose(std::uint64_t n, std::uint64_t k) {
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

ValueTable small_table(bool flagged) {
    ValueTable t;
    t.kind = flagged ? "stopping" : "control";
    t.flagged = flagged;
    t.particles = 2;
    t.x0 = -0.3;
    t.spacing = 0.1;
    t.h = 0.1;
    t.steps = 2;
    t.base_points = 3;
    t.growth = 1;
    t.config_hash = 42;
    detail::allocate_slices(t, 1000);
    for (std::size_t k = 0; k < t.slices.size(); ++k)
        for (std::size_t r = 0; r < t.slices[k].value.size(); ++r) {
            t.slices[k].value[r] = 0.1 * static_cast<double>(r) + 1.0 / 3.0 * static_cast<double>(k);
            t.slices[k].decision[r] = static_cast<std::int32_t>(r % 3);
        }
    return t;
}
}  // namespace

TEST_CASE("multiset ranking is a bijection onto sorted tuples") {
    for (std::size_t symbols : {1u, 4u, 7u})
        for (std::size_t n : {1u, 2u, 3u}) {
            MultisetIndex idx(symbols, n);
            REQUIRE(idx.size() == choose(symbols + n - 1, n));
            std::set<std::vector<std::size_t>> seen;
            std::vector<std::size_t> c(n);
            for (std::uint64_t r = 0; r < idx.size(); ++r) {
                idx.unrank(r, c);
                CHECK(std::is_sorted(c.begin(), c.end()));
                CHECK(c.back() < symbols);
                CHECK(idx.rank(c) == r);
                seen.insert(c);
            }
            CHECK(seen.size() == idx.size());
        }
}

TEST_CASE("value table slices and lookups") {
    const auto t = small_table(false);
    CHECK(t.slices[2].lo == -2);
    CHECK(t.slices[2].points == 7);
    const LatticeConfig c{-2, 4};
    CHECK(t.contains(2, c));
    CHECK_FALSE(t.contains(1, c));
    CHECK_THROWS_AS(t.value(1, c), PreconditionError);
    const std::vector<double> xs{0.1, -0.3};
    CHECK(t.config(xs) == LatticeConfig{0, 4});
    const std::vector<double> off{0.15, -0.3};
    CHECK_THROWS_AS(t.config(off), PreconditionError);

    const auto s = small_table(true);
    const LatticeConfig flagged = s.config(xs, {true, false});
    CHECK(flagged == LatticeConfig{0, 9});
    CHECK(s.alive(9));
    CHECK_FALSE(s.alive(0));
    CHECK(s.cell(-3) == -2);
    CHECK(s.alive(-3));
}

TEST_CASE("budget is enforced on the total state count") {
    ValueTable t;
    t.particles = 3;
    t.steps = 2;
    t.base_points = 5;
    t.growth = 1;
    // C(7,3) + C(9,3) + C(11,3) = 35 + 84 + 165.
    CHECK_NOTHROW(detail::allocate_slices(t, 284));
    try {
        detail::allocate_slices(t, 283);
        FAIL("expected a budget error");
    } catch (const BudgetError& e) {
        CHECK(e.requested() == 284);
        CHECK(e.budget() == 283);
    }
}

TEST_CASE("value table export round-trips") {
    for (bool flagged : {false, true}) {
        const auto t = small_table(flagged);
        std::ostringstream os;
        write_value_table(os, t);
        std::istringstream is(os.str());
        const auto back = read_value_table(is);
        CHECK(back.config_hash == 42);
        CHECK(back.flagged == flagged);
        for (std::size_t k = 0; k < t.slices.size(); ++k) {
            CHECK(back.slices[k].value == t.slices[k].value);
            CHECK(back.slices[k].decision == t.slices[k].decision);
        }
        std::ostringstream again;
        write_value_table(again, back);
        CHECK(again.str() == os.str());
    }
}

TEST_CASE("stopping keeps a fraction of the alive mass") {
    const std::vector<double> xs{0.0, 1.0, 2.0, 2.0};
    const auto m = EmpiricalMeasure::uniform_flagged(xs, {true, true, false, true});
    CHECK(apply_stopping(m, [](double) { return 1.0; }) == m);

    const auto none = apply_stopping(m, [](double) { return 0.0; });
    CHECK(none.flag_mass(true) == 0.0);
    CHECK(none.locations() == m.locations());

    const auto split = apply_stopping(m, [](double x) { return x >= 1.0 ? 1.0 : 0.0; });
    const auto expect = EmpiricalMeasure::uniform_flagged(xs, {false, true, false, true});
    CHECK(split == expect);
    CHECK_THROWS_AS(apply_stopping(m, [](double) { return 1.5; }), PreconditionError);
}

TEST_CASE("dominance by atomwise stopping") {
    const std::vector<double> xs{0.0, 1.0, 2.0};
    const auto m = EmpiricalMeasure::uniform_flagged(xs, {true, false, true});
    CHECK(is_dominated(m, m));
    const auto more_alive = EmpiricalMeasure::uniform_flagged(xs, {true, true, true});
    CHECK_FALSE(is_dominated(more_alive, m));
    CHECK(is_dominated(m, more_alive));
    const std::vector<double> moved{0.0, 1.0, 2.5};
    CHECK_FALSE(is_dominated(EmpiricalMeasure::uniform_flagged(moved, {false, false, false}), m));
    CHECK_FALSE(is_dominated(EmpiricalMeasure::uniform(xs), m));

    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> count(1, 8);
    std::uniform_int_distribution<int> cell(-5, 5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int dominated = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = count(rng);
        std::vector<double> loc(n);
        std::vector<bool> al(n);
        for (int i = 0; i < n; ++i) {
            loc[i] = 0.5 * cell(rng);
            al[i] = unit(rng) < 0.7;
        }
        const auto mm = EmpiricalMeasure::uniform_flagged(loc, al);
        const double cut = unit(rng);
        const auto p = [&](double x) { return trial % 2 ? unit(rng) : (x > cut ? 1.0 : 0.0); };
        dominated += is_dominated(apply_stopping(mm, p), mm) ? 1 : 0;
    }
    CHECK(dominated == 1000);
}

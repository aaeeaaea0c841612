#include "catch_amalgamated.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "mfito/control.hpp"

using namespace mfito;

namespace {
const auto kMean = CylindricalFunctional::linear(Polynomial({0.0, 1.0}));
const auto kMeanSq = CylindricalFunctional::squared(Polynomial({0.0, 1.0}));

ControlAction drift_action(double a) {
    ControlAction c;
    c.value = a;
    c.b = Coefficient::make_constant(a);
    return c;
}

ControlProblemSpec analytic(double h) {
    ControlProblemSpec s;
    s.actions = {drift_action(-1.0), drift_action(1.0)};
    s.g = kMean;
    s.horizon = 0.2;
    s.h = h;
    s.spacing = h;
    s.x0 = -4.0 * h;
    s.points = 9;
    s.particles = 3;
    return s;
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

/// Every configuration of slice k whose shifts by up to `margin` cells stay in the slice.
std::vector<LatticeConfig> interior(const ValueTable& t, std::size_t k, long margin = 1) {
    std::vector<LatticeConfig> out;
    const auto idx = t.index(k);
    const long lo = t.slices[k].lo;
    const long hi = lo + static_cast<long>(t.slices[k].points) - 1;
    for (std::uint64_t r = 0; r < idx.size(); ++r) {
        const auto c = t.unrank(k, r, idx);
        if (c.front() - margin >= lo && c.back() + margin <= hi) out.push_back(c);
    }
    return out;
}
}  // namespace

TEST_CASE("analytic control problem: drift toward the reward") {
    const auto spec = analytic(0.05);
    const auto t = solve_mfc_dp(spec);
    REQUIRE(t.steps == 4);
    double worst = 0.0;
    for (std::size_t k = 0; k <= t.steps; ++k) {
        const auto idx = t.index(k);
        for (std::uint64_t r = 0; r < idx.size(); ++r) {
            const auto c = t.unrank(k, r, idx);
            const double expect = mean_of(t.locations(c)) + (spec.horizon - t.time(k));
            worst = std::max(worst, std::abs(t.slices[k].value[r] - expect));
            if (k < t.steps) CHECK(t.slices[k].decision[r] == 1);
        }
    }
    CHECK(worst <= 1e-10);
    CHECK(t.rounding_error <= 1e-12);

    for (std::size_t k = 0; k < t.steps; ++k)
        for (const auto& c : interior(t, k)) {
            CHECK(std::abs(hjb_residual(t, spec, k, c)) <= 1e-9);
            CHECK(dpp_check(t, spec, k, c, StopRule::next_step) == 0.0);
            CHECK(dpp_check(t, spec, k, c, StopRule::horizon) <= 1e-12);
        }
}

TEST_CASE("HJB residual needs lattice room") {
    const auto spec = analytic(0.1);
    const auto t = solve_mfc_dp(spec);
    const auto& s = t.slices[0];
    const LatticeConfig edge{s.lo, s.lo, s.lo};
    CHECK_THROWS_AS(hjb_residual(t, spec, 0, edge), PreconditionError);
    CHECK_THROWS_AS(hjb_residual(t, spec, t.steps, edge), PreconditionError);
}

TEST_CASE("zero horizon returns the terminal reward") {
    auto spec = analytic(0.1);
    spec.horizon = 0.0;
    spec.g = kMeanSq;
    const auto t = solve_mfc_dp(spec);
    const auto idx = t.index(0);
    for (std::uint64_t r = 0; r < idx.size(); ++r) {
        const auto c = t.unrank(0, r, idx);
        const double m = mean_of(t.locations(c));
        CHECK(std::abs(t.slices[0].value[r] - m * m) <= 1e-14);
    }
}

TEST_CASE("budget overflow reports the state count") {
    auto spec = analytic(0.05);
    spec.budget = 100;
    CHECK_THROWS_AS(solve_mfc_dp(spec), BudgetError);
}

TEST_CASE("linear reward under a single control: generator consistency") {
    // Common jumps replace the drift step on the lattice chain, so the chain
    // drifts at b (1 - lambda h) + lambda gamma E[y] while the generator sees
    // b + lambda gamma E[y]: the residual is exactly -b lambda h.
    const double b = 0.5, lambda = 1.5, gamma = 0.1, ey = 0.5;
    for (double h : {0.1, 0.05}) {
        ControlProblemSpec s;
        ControlAction a;
        a.b = Coefficient::make_constant(b);
        a.sigma = Coefficient::make_constant(1.0);
        a.gamma = gamma;
        a.lambda = lambda;
        s.actions = {a};
        s.nu0 = DiscreteLaw{{1.0, -1.0}, {0.75, 0.25}};
        s.g = kMean;
        s.horizon = 0.4;
        s.h = h;
        s.spacing = 0.025;
        s.points = 5;
        s.particles = 2;
        const auto t = solve_mfc_dp(s);
        const double chain_rate = b * (1.0 - lambda * h) + lambda * gamma * ey;
        for (std::size_t k = 0; k < t.steps; ++k)
            for (const auto& c : interior(t, k, 4)) {
                const double expect = mean_of(t.locations(c)) + chain_rate * (s.horizon - t.time(k));
                CHECK(std::abs(t.value(k, c) - expect) <= 1e-10);
                CHECK(std::abs(hjb_residual(t, s, k, c) + b * lambda * h) <= 1e-9);
            }
    }
}

TEST_CASE("singleton control matches forward simulation of the lattice chain") {
    ControlProblemSpec s;
    ControlAction a;
    a.b = Coefficient::affine(0.2, 0.0, -0.5, 0.0, 1.0);
    a.sigma = Coefficient::make_constant(0.3);
    a.f = Coefficient::affine(0.0, 0.0, 1.0, 0.0, 1.0);
    a.gamma = 0.2;
    a.lambda = 1.0;
    s.actions = {a};
    s.nu0 = DiscreteLaw::dirac(1.0);
    s.g = kMeanSq;
    s.horizon = 0.2;
    s.h = 0.04;
    s.spacing = 0.1;
    s.x0 = -0.2;
    s.points = 5;
    s.particles = 2;
    const auto t = solve_mfc_dp(s);
    CHECK(t.rounding_error > 0.0);
    const LatticeConfig start{1, 3};

    // Independent simulation of the same rounded chain: jumps shift both
    // particles by 2 cells; otherwise each moves by its rounded drift and a
    // one-cell kick of random sign.
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int paths = 400'000;
    std::vector<double> samples(paths);
    for (int p = 0; p < paths; ++p) {
        std::vector<long> cells(start.begin(), start.end());
        double reward = 0.0;
        for (std::size_t k = 0; k < t.steps; ++k) {
            double x[2];
            for (int i = 0; i < 2; ++i) x[i] = -0.2 + 0.1 * static_cast<double>(cells[i]);
            reward += 0.5 * (x[0] + x[1]) * s.h;
            if (unit(rng) < s.h * a.lambda) {
                for (auto& c : cells) c += 2;
                continue;
            }
            for (int i = 0; i < 2; ++i) {
                cells[i] += std::lround((0.2 - 0.5 * x[i]) * s.h / 0.1);
                cells[i] += unit(rng) < 0.5 ? 1 : -1;
            }
        }
        const double m = -0.2 + 0.05 * static_cast<double>(cells[0] + cells[1]);
        samples[p] = reward + m * m;
    }
    double mean = 0.0, var = 0.0;
    for (double v : samples) mean += v;
    mean /= paths;
    for (double v : samples) var += (v - mean) * (v - mean);
    const double se = std::sqrt(var / (paths - 1.0) / paths);
    CHECK(std::abs(t.value(0, start) - mean) <= 4.0 * se);

    for (std::size_t k = 0; k < t.steps; ++k)
        for (const auto& c : interior(t, k)) {
            CHECK(dpp_check(t, s, k, c, StopRule::next_step) == 0.0);
            CHECK(dpp_check(t, s, k, c, StopRule::horizon) <= 1e-12);
            CHECK(dpp_check(t, s, k, c, StopRule::first_common_jump) <= 1e-10);
        }
}

TEST_CASE("multi-step DPP under the optimal policy with jumps") {
    auto spec = analytic(0.05);
    for (auto& a : spec.actions) {
        a.sigma = Coefficient::make_constant(0.2);
        a.gamma = a.value * 0.05;
        a.lambda = 2.0;
    }
    spec.g = kMeanSq;
    const auto t = solve_mfc_dp(spec);
    for (std::size_t k = 0; k < t.steps; ++k)
        for (const auto& c : interior(t, k)) {
            CHECK(dpp_check(t, spec, k, c, StopRule::horizon) <= 1e-10);
            CHECK(dpp_check(t, spec, k, c, StopRule::first_common_jump) <= 1e-10);
        }
}

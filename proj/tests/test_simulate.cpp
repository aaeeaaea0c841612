#include "catch_amalgamated.hpp"

#include <cmath>
#include <vector>

#include "mfito/simulate.hpp"

using namespace mfito;

namespace {
ModelSpec base_model() {
    ModelSpec s;
    s.m0 = EmpiricalMeasure::uniform(std::vector<double>{-1.0, 0.5, 2.0});
    s.horizon = 1.0;
    return s;
}
}  // namespace

TEST_CASE("frozen dynamics keep every path at its initial atom") {
    const auto path = simulate(base_model(), 6, 0.1, 1);
    for (std::size_t e = 0; e < path.times.size(); ++e)
        for (std::size_t i = 0; i < 6; ++i) CHECK(path.particles.at(e)[i] == path.particles.at(0)[i]);
    CHECK(path.particles.jumps.empty());
    const auto rep = integrability_monitor(path);
    CHECK(rep.drift_variation_sq == 0.0);
    CHECK(rep.quadratic_variation == 0.0);
    CHECK(rep.jump_variation_sq == 0.0);
}

TEST_CASE("constant drift is integrated exactly") {
    auto s = base_model();
    s.b = Coefficient::make_constant(1.0);
    const auto path = simulate(s, 3, 0.125, 2);
    const auto last = path.particles.at(path.steps());
    const auto first = path.particles.at(0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(last[i] == first[i] + 1.0);
    const auto coarse = simulate(s, 3, 0.1, 2);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(coarse.particles.at(coarse.steps())[i] - first[i] - 1.0) < 1e-14);
}

TEST_CASE("poisson jump counts match the intensity") {
    auto s = base_model();
    s.lambda = Coefficient::make_constant(2.0);
    s.gamma = Coefficient::make_constant(1.0);
    SimulationOptions opt;
    opt.store_paths = false;
    const std::size_t n = 10000;
    const auto path = simulate(s, n, 0.5, 3, opt);
    const auto rep = integrability_monitor(path);
    CHECK(std::abs(rep.mean_idio_jumps - 2.0) < 3.0 * std::sqrt(2.0 / n));
    CHECK(rep.jump_variation_sq <= rep.jump_bound + 1e-12);
}

TEST_CASE("integrability statistics for pure diffusion") {
    auto s = base_model();
    s.sigma = Coefficient::make_constant(1.0);
    const auto path = simulate(s, 200, 0.01, 4);
    const auto rep = integrability_monitor(path);
    CHECK(std::abs(rep.quadratic_variation - 1.0) < 1e-12);
    CHECK(rep.finite);
}

TEST_CASE("empirical flow left limits") {
    auto s = base_model();
    s.lambda0 = Coefficient::make_constant(3.0);
    s.gamma0 = Coefficient::make_constant(1.0);
    s.sigma = Coefficient::make_constant(0.3);
    const auto path = simulate(s, 5, 0.1, 5);
    const auto [m0m, m0] = empirical_flow(path, 0.0);
    CHECK(m0m == m0);
    CHECK(m0 == EmpiricalMeasure::uniform(path.particles.at(0)));
    const auto jumps = accepted_common_jumps(path);
    REQUIRE(!jumps.empty());
    for (const auto& ev : jumps) {
        CHECK(ev.accepted_particles == 5);
        const auto [before, after] = empirical_flow(path, ev.time);
        CHECK(after == pushforward(before, [](double x) { return x + 1.0; }));
        // Strictly between events the flow is continuous.
        const double mid = 0.5 * (path.times[ev.step - 1] + ev.time);
        const auto [a, b] = empirical_flow(path, mid);
        CHECK(a == b);
    }
    CHECK_THROWS_AS(empirical_flow(path, 1.5), PreconditionError);
}

TEST_CASE("preconditions and bound violations") {
    auto s = base_model();
    CHECK_THROWS_AS(simulate(s, 1, 0.1, 1), PreconditionError);
    CHECK_THROWS_AS(simulate(s, 2, 0.0, 1), PreconditionError);
    s.lambda = Coefficient::make_constant(3.0, 2.0);
    CHECK_THROWS_AS(simulate(s, 2, 0.1, 1), BoundViolation);

    // Passes the construction probe, then exceeds Lambda once the drift moves particles.
    auto r = base_model();
    r.m0 = EmpiricalMeasure::dirac(0.0);
    r.b = Coefficient::make_constant(5.0);
    r.lambda = Coefficient::affine(0.0, 0.0, 1.0, 0.0, 2.0);
    r.horizon = 1.0;
    try {
        simulate(r, 2, 0.01, 1);
        FAIL("expected a bound violation");
    } catch (const BoundViolation& e) {
        CHECK(std::string(e.what()).find("x=") != std::string::npos);
    }
}

TEST_CASE("simulation is deterministic") {
    auto s = base_model();
    s.sigma = Coefficient::make_constant(0.5);
    s.sigma0 = Coefficient::make_constant(0.2);
    s.lambda = Coefficient::make_constant(1.0);
    s.gamma = Coefficient::affine(0.1, 0.0, 0.0, 0.1, 5.0);
    s.lambda0 = Coefficient::make_constant(1.0);
    s.gamma0 = Coefficient::make_constant(-0.5);
    const auto a = simulate(s, 20, 0.05, 77);
    const auto b = simulate(s, 20, 0.05, 77);
    CHECK(a.times == b.times);
    CHECK(a.particles.values == b.particles.values);
    CHECK(a.copies.values == b.copies.values);
    const auto c = simulate(s, 20, 0.05, 78);
    CHECK(a.particles.values != c.particles.values);
}

TEST_CASE("base-grid common Brownian values ignore inserted events") {
    auto s = base_model();
    s.sigma0 = Coefficient::make_constant(1.0);
    const auto plain = simulate(s, 4, 0.1, 9);
    s.lambda = Coefficient::make_constant(5.0);
    const auto busy = simulate(s, 4, 0.1, 9);
    REQUIRE(busy.times.size() > plain.times.size());
    std::size_t k = 0;
    for (std::size_t e = 0; e < busy.times.size(); ++e)
        if (busy.on_base_grid[e]) CHECK(std::abs(busy.W0[e] - plain.W0[k++]) < 1e-12);
    CHECK(k == plain.times.size());
}

TEST_CASE("particles and copies are conditionally independent") {
    auto s = base_model();
    s.sigma = Coefficient::make_constant(1.0);
    s.sigma0 = Coefficient::make_constant(1.0);
    const std::size_t n = 4000;
    const auto path = simulate(s, n, 0.25, 10);
    const auto p0 = path.particles.at(0);
    const auto pT = path.particles.at(path.steps());
    const auto c0 = path.copies.at(0);
    const auto cT = path.copies.at(path.steps());
    // Remove the shared common-noise displacement W0_T.
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = pT[i] - p0[i] - path.W0.back();
        const double dy = cT[i] - c0[i] - path.W0.back();
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    CHECK(std::abs(sxy / std::sqrt(sxx * syy)) < 4.0 / std::sqrt(double(n)));
}

TEST_CASE("single-particle jumps move the flow by at most the displacement bound") {
    auto s = base_model();
    s.lambda = Coefficient::make_constant(2.0);
    s.gamma = Coefficient::make_constant(0.5);
    s.nu = {{1.0, -2.0}, {0.5, 0.5}};
    s.lambda0 = Coefficient::make_constant(1.0);
    s.gamma0 = Coefficient::make_constant(1.0);
    const std::size_t n = 16;
    const auto path = simulate(s, n, 0.1, 11);
    const double bound = 0.5 * 2.0 / std::sqrt(double(n));
    std::vector<char> common(path.times.size(), 0);
    for (const auto& ev : path.common) common[ev.step] = 1;
    for (const auto& ev : accepted_common_jumps(path)) CHECK(common[ev.step]);
    for (std::size_t e = 1; e < path.times.size(); ++e) {
        if (common[e]) continue;
        const auto [before, after] = empirical_flow(path, path.times[e]);
        CHECK(wasserstein(before, after, 2) <= bound + 1e-12);
    }
}

TEST_CASE("shared jump streams make particle and copy jump times coincide") {
    auto s = base_model();
    s.lambda = Coefficient::make_constant(5.0);
    s.gamma = Coefficient::make_constant(1.0);
    SimulationOptions opt;
    opt.shared_jump_stream = true;
    const auto path = simulate(s, 10, 0.1, 12, opt);
    CHECK(path.particles.jumps.size() == path.copies.jumps.size());
}

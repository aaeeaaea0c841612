#include "catch_amalgamated.hpp"

#include <cmath>
#include <vector>

#include "mfito/wentzell.hpp"

using namespace mfito;

namespace {
ModelSpec model_with(std::vector<double> atoms) {
    ModelSpec s;
    s.m0 = EmpiricalMeasure::uniform(atoms);
    s.horizon = 1.0;
    return s;
}

ModelSpec common_jump_model() {
    auto s = model_with({0.0, 1.0, 2.5});
    s.lambda0 = Coefficient::make_constant(3.0);
    s.gamma0 = Coefficient::make_constant(1.0);
    return s;
}

const auto kZero = CylindricalFunctional();
const auto kOne = CylindricalFunctional::linear(Polynomial({1.0}));
const auto kMean = CylindricalFunctional::linear(Polynomial({0.0, 1.0}));
const auto kMeanSq = CylindricalFunctional::squared(Polynomial({0.0, 1.0}));
const auto kSecond = CylindricalFunctional::linear(Polynomial({0.0, 0.0, 1.0}));

std::size_t counter_jumps(const ScenarioPath& path) { return accepted_common_jumps(path).size(); }
}  // namespace

TEST_CASE("time profiles integrate piecewise polynomials exactly") {
    TimeProfile p{{0.5}, {Polynomial({1.0}), Polynomial({0.0, 2.0})}};
    CHECK(p(0.25) == 1.0);
    CHECK(p(0.5) == 1.0);
    CHECK(p(0.75) == 1.5);
    // int_0^0.5 1 + int_0.5^1 2t = 0.5 + 0.75.
    CHECK(std::abs(p.integral(0.0, 1.0) - 1.25) <= 1e-15);
    CHECK(std::abs(p.integral(0.6, 0.8) - (0.64 - 0.36)) <= 1e-15);
    TimeProfile bad{{0.5}, {Polynomial({1.0})}};
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
}

TEST_CASE("degenerate field reduces to the Ito breakdown") {
    auto s = model_with({-1.0, 0.5, 2.0});
    s.b = Coefficient::affine(0.1, 0.0, -0.2, 0.0, 5.0);
    s.sigma = Coefficient::make_constant(0.5);
    s.sigma0 = Coefficient::make_constant(0.3);
    s.lambda = Coefficient::make_constant(1.0);
    s.gamma = Coefficient::make_constant(0.4);
    const auto path = simulate(s, 12, 0.05, 3);
    RandomFieldSpec U{kMeanSq, {}, {}, FvDriver::none, MartingaleDriver::none};
    const auto w = verify_wentzell(U, path, 1.0);
    const auto r = verify_ito(kMeanSq, path, 1.0);
    CHECK(w.ito.lhs == r.lhs);
    CHECK(w.ito.drift_term == r.drift_term);
    CHECK(w.ito.diffusion_term == r.diffusion_term);
    CHECK(w.ito.common_integral_term == r.common_integral_term);
    CHECK(w.ito.covariation_term == r.covariation_term);
    CHECK(w.ito.idio_jump_term == r.idio_jump_term);
    CHECK(w.residual == r.residual);
    CHECK(w.driver_A_term == 0.0);
    CHECK(w.cross_bracket_term == 0.0);
}

TEST_CASE("field evaluation by pathwise substitution") {
    auto s = model_with({0.0, 1.0});
    s.sigma0 = Coefficient::make_constant(1.0);
    const auto path = simulate(s, 4, 0.1, 5);
    const auto m = EmpiricalMeasure::uniform(std::vector<double>{-0.5, 1.5, 2.0});
    const DerivativeQuery value{DerivativeKind::value, {}};
    const double u0 = eval(kMeanSq, m, value);

    RandomFieldSpec frozen{kMeanSq, {}, {}, FvDriver::none, MartingaleDriver::none};
    CHECK(field_eval(frozen, path, 0.7, m, value) == u0);

    RandomFieldSpec clock{kMeanSq, {{kOne, TimeProfile::constant(1.0)}}, {}, FvDriver::time, MartingaleDriver::none};
    CHECK(std::abs(field_eval(clock, path, 0.7, m, value) - (u0 + 0.7)) <= 1e-14);
    CHECK(std::abs(field_eval(clock, path, 0.73, m, value) - (u0 + 0.73)) <= 1e-14);

    RandomFieldSpec brown{kMeanSq, {}, {{kMean, TimeProfile::constant(1.0)}}, FvDriver::none,
                          MartingaleDriver::common_brownian};
    const std::size_t e = path.index_at(0.7);
    CHECK(std::abs(field_eval(brown, path, 0.7, m, value) - (u0 + 1.0 * path.W0[e])) <= 1e-14);
    const DerivativeQuery dx{DerivativeKind::dx_flat, {0.3}};
    CHECK(std::abs(field_eval(brown, path, 0.7, m, dx) - (eval(kMeanSq, m, dx) + path.W0[e])) <= 1e-14);
    CHECK_THROWS_AS(field_eval(brown, path, 0.73, m, value), PreconditionError);
    CHECK_THROWS_AS(field_eval(brown, path, 1.5, m, value), PreconditionError);
}

TEST_CASE("drivers must be realized and common-measurable") {
    auto s = common_jump_model();
    const auto path = simulate(s, 3, 0.1, 1);
    RandomFieldSpec no_driver{kZero, {{kMean, TimeProfile::constant(1.0)}}, {}, FvDriver::none, MartingaleDriver::none};
    CHECK_THROWS_AS(verify_wentzell(no_driver, path, 1.0), PreconditionError);

    auto v = common_jump_model();
    v.lambda0 = Coefficient::affine(1.0, 0.0, 0.1, 0.0, 3.0);
    const auto vpath = simulate(v, 3, 0.1, 1);
    RandomFieldSpec counter{kZero, {{kMean, TimeProfile::constant(1.0)}}, {}, FvDriver::common_counter,
                            MartingaleDriver::none};
    CHECK_THROWS_AS(verify_wentzell(counter, vpath, 1.0), PreconditionError);
}

TEST_CASE("common Brownian driver needs the cross bracket") {
    const double c = 0.7;
    auto s = model_with({-0.5, 1.0});
    s.sigma0 = Coefficient::make_constant(c);
    const auto path = simulate(s, 8, 0.01, 6);
    RandomFieldSpec U{kZero, {}, {{kMean, TimeProfile::constant(1.0)}}, FvDriver::none,
                      MartingaleDriver::common_brownian};
    const auto w = verify_wentzell(U, path, 1.0);

    // Product expansion: d(xbar W) = xbar dW + W c dW + c dW^2.
    const double xbar0 = 0.25;
    double wsum = 0.0;
    double qv = 0.0;
    for (double dw : path.dW0) {
        wsum += dw;
        qv += dw * dw;
    }
    CHECK(std::abs(w.ito.lhs - (xbar0 + c * wsum) * wsum) <= 1e-12);
    CHECK(std::abs(w.cross_bracket_term - c) <= 1e-12);
    CHECK(std::abs(w.residual - c * (qv - 1.0)) <= 1e-12);
    CHECK(w.transport_error <= 1e-13);
    CHECK(w.n_bracket == 1.0);
    CHECK(w.bounded_drivers);
    CHECK(w.ito.ledger.finite());
}

TEST_CASE("common counter driver activates the jump cross term") {
    auto s = common_jump_model();
    s.sigma = Coefficient::make_constant(0.3);
    const auto path = simulate(s, 10, 0.05, 7);
    const std::size_t jumps = counter_jumps(path);
    REQUIRE(jumps > 0);
    RandomFieldSpec U{kZero, {{kMean, TimeProfile::constant(1.0)}}, {}, FvDriver::common_counter,
                      MartingaleDriver::none};
    const auto w = verify_wentzell(U, path, 1.0);
    CHECK(std::abs(w.cross_jump_term - static_cast<double>(jumps)) <= 1e-12);
    CHECK(std::abs(w.residual) <= 1e-12);
    CHECK(w.a_total_variation == static_cast<double>(jumps));
    CHECK_FALSE(w.bounded_drivers);
    CHECK(w.transport_error <= 1e-13);
}

TEST_CASE("nonlinear field under a counter driver leaves the jump curvature") {
    const auto path = simulate(common_jump_model(), 6, 0.1, 8);
    const std::size_t jumps = counter_jumps(path);
    REQUIRE(jumps > 0);
    RandomFieldSpec U{kZero, {{kMeanSq, TimeProfile::constant(1.0)}}, {}, FvDriver::common_counter,
                      MartingaleDriver::none};
    const auto w = verify_wentzell(U, path, 1.0);
    // (xbar + 1)^2 - xbar^2 - 2 xbar = 1 per unit jump.
    CHECK(std::abs(w.jump_curvature - static_cast<double>(jumps)) <= 1e-12);
    CHECK(std::abs(w.residual - w.jump_curvature) <= 1e-12);
}

TEST_CASE("compensated counter driver uses the jump bracket") {
    const auto path = simulate(common_jump_model(), 5, 0.1, 9);
    const std::size_t jumps = counter_jumps(path);
    REQUIRE(jumps > 0);
    RandomFieldSpec U{kZero, {}, {{kMean, TimeProfile::constant(1.0)}}, FvDriver::none,
                      MartingaleDriver::compensated_counter};
    const auto w = verify_wentzell(U, path, 1.0);
    const double xbar0 = pairwise_mean(path.particles.at(0));
    const double NT = static_cast<double>(jumps) - 3.0;
    CHECK(std::abs(w.ito.lhs - (xbar0 + static_cast<double>(jumps)) * NT) <= 1e-12);
    CHECK(std::abs(w.cross_jump_term - static_cast<double>(jumps)) <= 1e-12);
    CHECK(std::abs(w.residual) <= 1e-12);
}

TEST_CASE("time-dependent profiles with a clock driver") {
    auto s = model_with({0.0, 1.0});
    s.b = Coefficient::make_constant(0.5);
    const auto path = simulate(s, 4, 0.125, 10);
    RandomFieldSpec U{kZero, {{kMean, TimeProfile{{0.5}, {Polynomial({1.0}), Polynomial({0.0, 2.0})}}}}, {},
                      FvDriver::time, MartingaleDriver::none};
    const auto w = verify_wentzell(U, path, 1.0);
    // U_T(m_T) = 1.25 * (0.5 + 0.5).
    CHECK(std::abs(w.ito.lhs - 1.25) <= 1e-12);
    CHECK(w.transport_error <= 1e-13);
    // Left-point drive of xbar against dA: residual is the Riemann error of int f(s) xbar_s ds.
    CHECK(std::abs(w.residual) <= 0.1);
}

TEST_CASE("field partition diagnostic") {
    SECTION("continuous model has zero limit") {
        auto s = model_with({0.0, 1.0});
        s.sigma = Coefficient::make_constant(1.0);
        const auto path = simulate(s, 20, 1.0 / 64, 11);
        RandomFieldSpec U{kZero, {{kSecond, TimeProfile::constant(1.0)}}, {}, FvDriver::time,
                          MartingaleDriver::none};
        const auto rows = field_partition_diagnostic(U, path, dyadic_partitions(path, 4));
        CHECK(rows.front().single_limit == 0.0);
        CHECK(rows.back().single_gap < rows.front().single_gap);
        CHECK(rows.back().single_gap <= 0.1);
    }
    SECTION("pure common jumps are exact on the event grid") {
        const auto path = simulate(common_jump_model(), 6, 0.1, 12);
        const double jumps = static_cast<double>(counter_jumps(path));
        REQUIRE(jumps > 0);
        RandomFieldSpec U{kZero, {{kSecond, TimeProfile::constant(1.0)}, {kMeanSq, TimeProfile::constant(1.0)}}, {},
                          FvDriver::common_counter, MartingaleDriver::none};
        const auto rows = field_partition_diagnostic(U, path, dyadic_partitions(path, 2));
        CHECK(std::abs(rows.back().single_limit - 2.0 * jumps) <= 1e-12);
        CHECK(std::abs(rows.back().pair_limit - 2.0 * jumps) <= 1e-12);
        CHECK(rows.back().single_gap <= 1e-12);
        CHECK(rows.back().pair_gap <= 1e-12);
    }
}

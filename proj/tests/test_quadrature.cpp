#include "catch_amalgamated.hpp"

#include <cmath>

#include "mfito/quadrature.hpp"

TEST_CASE("gauss-legendre integrates monomials exactly up to degree 2n-1") {
    for (int n = 1; n <= 12; ++n) {
        const mfito::GaussLegendre gl(n);
        for (int d = 0; d <= 2 * n - 1; ++d) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += gl.weights[i] * std::pow(gl.nodes[i], d);
            CHECK(std::abs(s - 1.0 / (d + 1)) < 1e-14);
        }
    }
}

TEST_CASE("one node too few is not exact") {
    const mfito::GaussLegendre gl(2);
    double s = 0.0;
    for (int i = 0; i < 2; ++i) s += gl.weights[i] * std::pow(gl.nodes[i], 4);
    CHECK(std::abs(s - 0.2) > 1e-4);
}

TEST_CASE("node count for degree") {
    using G = mfito::GaussLegendre;
    CHECK(G::nodes_for_degree(0) == 1);
    CHECK(G::nodes_for_degree(1) == 1);
    CHECK(G::nodes_for_degree(2) == 2);
    CHECK(G::nodes_for_degree(3) == 2);
    CHECK(G::nodes_for_degree(4) == 3);
    CHECK(G::nodes_for_degree(7) == 4);
}

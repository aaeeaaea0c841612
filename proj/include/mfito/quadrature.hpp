#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "mfito/errors.hpp"

namespace mfito {

/// Gauss-Legendre rule mapped to [0,1]. Exact for polynomials of degree
/// at most 2n-1.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int n) {
        detail::require(n >= 1, "Gauss-Legendre rule needs at least one node");
        nodes.resize(n);
        weights.resize(n);
        for (int i = 0; i < n; ++i) {
            // Newton iteration on P_n from the Chebyshev-like initial guess.
            double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0;
                double p1 = 0.0;
                for (int k = 1; k <= n; ++k) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
                }
                dp = n * (z * p0 - p1) / (z * z - 1.0);
                const double dz = p0 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) break;
            }
            // Recompute the derivative at the converged node.
            double p0 = 1.0;
            double p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            nodes[i] = 0.5 * (1.0 - z);
            weights[i] = 1.0 / ((1.0 - z * z) * dp * dp);  // 2/((1-z^2)P'^2) halved for [0,1]
        }
    }

    int size() const { return static_cast<int>(nodes.size()); }

    /// Smallest node count exact for a polynomial integrand of the given degree.
    static int nodes_for_degree(int degree) { return degree <= 1 ? 1 : (degree + 2) / 2; }
};

}  // namespace mfito

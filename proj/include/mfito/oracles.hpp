#pragma once

// Brute-force reference computations. Deliberately naive; used by tests and
// by the oracle suites of the harness, never by the primary algorithms.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mfito/errors.hpp"
#include "mfito/functional.hpp"
#include "mfito/measure.hpp"

namespace mfito::oracle {

/// W_p between two equal-size uniform point clouds by enumerating every
/// assignment. n <= 8.
inline double assignment_wasserstein(std::vector<double> xs, const std::vector<double>& ys, int order) {
    detail::require(xs.size() == ys.size() && !xs.empty() && xs.size() <= 8,
                    "assignment oracle needs equal sizes between 1 and 8");
    std::vector<std::size_t> perm(xs.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) s += std::pow(std::abs(xs[i] - ys[perm[i]]), order);
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::pow(best / static_cast<double>(xs.size()), 1.0 / order);
}

/// Right-hand side of the flat-derivative identity by composite Simpson on a
/// dense lambda grid, with the expectation taken separately under m0 and m1.
inline double dense_flat_identity_rhs(const CylindricalFunctional& u, const EmpiricalMeasure& m0,
                                      const EmpiricalMeasure& m1, int intervals) {
    detail::require(intervals >= 2 && intervals % 2 == 0, "Simpson rule needs an even interval count");
    auto integrand = [&](double lam) {
        const EmpiricalMeasure mu = mix(m0, m1, lam);
        const Jet J = u.at(mu);
        const double e0 = m0.integrate([&](const Atom& a) { return u.flat(J, a.location); });
        const double e1 = m1.integrate([&](const Atom& a) { return u.flat(J, a.location); });
        return e0 - e1;
    };
    const double h = 1.0 / intervals;
    double odd = 0.0;
    double even = 0.0;
    for (int i = 1; i < intervals; ++i) (i % 2 ? odd : even) += integrand(i * h);
    return h / 3.0 * (integrand(0.0) + integrand(1.0) + 4.0 * odd + 2.0 * even);
}

/// Average of d_x d_xh delta^2 u over every (particle, copy) pair, summed
/// directly instead of through the Hessian factorization.
inline double pair_mean_bruteforce(const CylindricalFunctional& u, const Jet& J, const std::vector<double>& xs,
                                   const std::vector<double>& w, const std::vector<double>& xh,
                                   const std::vector<double>& wh) {
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < xh.size(); ++j) s += w[i] * wh[j] * u.dxdxhat_flat2(J, xs[i], xh[j]);
    return s / static_cast<double>(xs.size() * xh.size());
}

}  // namespace mfito::oracle

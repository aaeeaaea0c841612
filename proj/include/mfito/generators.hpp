#pragma once

#include <algorithm>
#include <vector>

#include "mfito/functional.hpp"
#include "mfito/measure.hpp"
#include "mfito/random.hpp"

namespace mfito {

/// Random cylindrical functional with k features, outer degree <= outer_deg
/// and inner degree <= inner_deg. Coefficients uniform in [-1,1].
inline CylindricalFunctional random_functional(Stream& s, int k, int outer_deg, int inner_deg) {
    std::vector<Polynomial> inner;
    for (int j = 0; j < k; ++j) {
        std::vector<double> c(static_cast<std::size_t>(inner_deg) + 1);
        for (auto& v : c) v = s.uniform(-1.0, 1.0);
        inner.emplace_back(std::move(c));
    }
    // Every monomial of total degree <= outer_deg in k variables.
    std::vector<Monomial> terms;
    std::vector<int> e(static_cast<std::size_t>(k), 0);
    for (;;) {
        int total = 0;
        for (int v : e) total += v;
        if (total <= outer_deg) terms.push_back({s.uniform(-1.0, 1.0), e});
        std::size_t pos = 0;
        while (pos < e.size() && e[pos] == outer_deg) e[pos++] = 0;
        if (pos == e.size()) break;
        ++e[pos];
    }
    return CylindricalFunctional(MultiPolynomial(static_cast<std::size_t>(k), std::move(terms)), std::move(inner));
}

/// Random measure on R with n atoms in [lo, hi] and Dirichlet-like weights.
inline EmpiricalMeasure random_measure(Stream& s, std::size_t n, double lo, double hi, bool uniform_weights) {
    std::vector<Atom> atoms(n);
    double total = 0.0;
    for (auto& a : atoms) {
        a.location = s.uniform(lo, hi);
        a.weight = uniform_weights ? 1.0 : s.exponential(1.0);
        total += a.weight;
    }
    for (auto& a : atoms) a.weight /= total;
    // Renormalization error is far below the mass tolerance.
    return EmpiricalMeasure(Space::real, std::move(atoms));
}

}  // namespace mfito

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "mfito/errors.hpp"
#include "mfito/measure.hpp"

namespace mfito {

/// Keeps a fraction p(x) of the alive mass at x alive and stops the rest.
inline EmpiricalMeasure apply_stopping(const EmpiricalMeasure& m, const std::function<double(double)>& p) {
    detail::require(m.space() == Space::flagged, "stopping acts on measures over S");
    std::vector<Atom> atoms;
    for (const auto& a : m.atoms()) {
        if (!a.alive) {
            atoms.push_back(a);
            continue;
        }
        const double q = p(a.location);
        detail::require(q >= 0.0 && q <= 1.0, "stopping probability must lie in [0,1]");
        atoms.push_back({a.location, q * a.weight, true});
        atoms.push_back({a.location, (1.0 - q) * a.weight, false});
    }
    return EmpiricalMeasure(Space::flagged, std::move(atoms));
}

namespace detail {

struct FlagMass {
    double location;
    double alive = 0.0;
    double stopped = 0.0;
};

inline std::vector<FlagMass> by_location(const EmpiricalMeasure& m) {
    std::vector<FlagMass> out;
    for (const auto& a : m.atoms()) {
        if (out.empty() || a.location - out.back().location > EmpiricalMeasure::kMergeTolerance)
            out.push_back({a.location});
        (a.alive ? out.back().alive : out.back().stopped) += a.weight;
    }
    return out;
}

}  // namespace detail

/// True when m2 = apply_stopping(m, p) for some p: per location, mass is
/// conserved and the alive mass does not grow.
inline bool is_dominated(const EmpiricalMeasure& m2, const EmpiricalMeasure& m, double tol = 1e-12) {
    if (m2.space() != Space::flagged || m.space() != Space::flagged) return false;
    const auto a = detail::by_location(m);
    const auto b = detail::by_location(m2);
    std::size_t j = 0;
    for (const auto& cell : b) {
        while (j < a.size() && a[j].location < cell.location - EmpiricalMeasure::kMergeTolerance) ++j;
        if (j == a.size() || std::abs(a[j].location - cell.location) > EmpiricalMeasure::kMergeTolerance) return false;
        if (cell.alive > a[j].alive + tol) return false;
        if (std::abs(cell.alive + cell.stopped - a[j].alive - a[j].stopped) > tol) return false;
    }
    // Locations present in m but absent from m2 would lose mass.
    std::size_t i = 0;
    for (const auto& cell : a) {
        while (i < b.size() && b[i].location < cell.location - EmpiricalMeasure::kMergeTolerance) ++i;
        if (i == b.size() || std::abs(b[i].location - cell.location) > EmpiricalMeasure::kMergeTolerance) return false;
    }
    return true;
}

}  // namespace mfito

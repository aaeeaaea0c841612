#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mfito/errors.hpp"
#include "mfito/summation.hpp"
#include "mfito/transport.hpp"

namespace mfito {

/// Support space of an empirical measure: the real line or S = R x {0,1}.
enum class Space { real, flagged };

struct Atom {
    double location = 0.0;
    double weight = 0.0;
    bool alive = false;  // meaningful on the flagged space only

    friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finitely supported probability measure on R or on S.
///
/// Atoms are kept in canonical order (location, then flag); atoms of equal
/// flag whose locations differ by at most kMergeTolerance are merged, so
/// equal measures compare equal.
class EmpiricalMeasure {
public:
    static constexpr double kMergeTolerance = 1e-12;
    static constexpr double kMassTolerance = 1e-12;

    EmpiricalMeasure() : EmpiricalMeasure(Space::real, {{0.0, 1.0, false}}) {}

    EmpiricalMeasure(Space space, std::vector<Atom> atoms) : space_(space), atoms_(std::move(atoms)) {
        canonicalize();
    }

    static EmpiricalMeasure dirac(double x) { return EmpiricalMeasure(Space::real, {{x, 1.0, false}}); }

    /// Uniform weights over the given locations (duplicates coalesce).
    static EmpiricalMeasure uniform(std::span<const double> xs) {
        detail::require(!xs.empty(), "empirical measure needs at least one atom");
        std::vector<Atom> atoms;
        atoms.reserve(xs.size());
        const double w = 1.0 / static_cast<double>(xs.size());
        for (double x : xs) atoms.push_back({x, w, false});
        return EmpiricalMeasure(Space::real, std::move(atoms));
    }

    /// Uniform weights over (location, alive) pairs on S.
    static EmpiricalMeasure uniform_flagged(std::span<const double> xs, const std::vector<bool>& alive) {
        detail::require(!xs.empty() && xs.size() == alive.size(),
                        "flagged measure needs matching location and flag lists");
        std::vector<Atom> atoms;
        const double w = 1.0 / static_cast<double>(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) atoms.push_back({xs[i], w, static_cast<bool>(alive[i])});
        return EmpiricalMeasure(Space::flagged, std::move(atoms));
    }

    Space space() const noexcept { return space_; }
    std::span<const Atom> atoms() const noexcept { return atoms_; }
    std::size_t size() const noexcept { return atoms_.size(); }

    double second_moment() const {
        std::vector<double> terms(atoms_.size());
        for (std::size_t i = 0; i < atoms_.size(); ++i)
            terms[i] = atoms_[i].weight * atoms_[i].location * atoms_[i].location;
        return pairwise_sum(terms);
    }

    /// Integral of f against the measure.
    template <typename F>
    double integrate(F&& f) const {
        std::vector<double> terms(atoms_.size());
        for (std::size_t i = 0; i < atoms_.size(); ++i) terms[i] = atoms_[i].weight * f(atoms_[i]);
        return pairwise_sum(terms);
    }

    /// Total mass carried by atoms with the given flag (flagged space only).
    double flag_mass(bool alive) const {
        return integrate([alive](const Atom& a) { return a.alive == alive ? 1.0 : 0.0; });
    }

    /// Projection onto locations (forgets flags).
    EmpiricalMeasure locations() const {
        std::vector<Atom> atoms = atoms_;
        for (auto& a : atoms) a.alive = false;
        return EmpiricalMeasure(Space::real, std::move(atoms));
    }

    friend bool operator==(const EmpiricalMeasure&, const EmpiricalMeasure&) = default;

private:
    void canonicalize() {
        for (const auto& a : atoms_) {
            detail::require(std::isfinite(a.location) && std::isfinite(a.weight),
                            "measure atoms must be finite");
            detail::require(a.weight >= 0.0, "measure weights must be nonnegative");
        }
        if (space_ == Space::real)
            for (auto& a : atoms_) a.alive = false;
        std::erase_if(atoms_, [](const Atom& a) { return a.weight == 0.0; });
        detail::require(!atoms_.empty(), "measure has no mass");

        std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) {
            if (a.alive != b.alive) return a.alive < b.alive;
            return a.location < b.location;
        });
        std::vector<Atom> merged;
        merged.reserve(atoms_.size());
        for (const auto& a : atoms_) {
            if (!merged.empty() && merged.back().alive == a.alive &&
                a.location - merged.back().location <= kMergeTolerance) {
                merged.back().weight += a.weight;
            } else {
                merged.push_back(a);
            }
        }
        std::sort(merged.begin(), merged.end(), [](const Atom& a, const Atom& b) {
            if (a.location != b.location) return a.location < b.location;
            return a.alive < b.alive;
        });
        atoms_ = std::move(merged);

        std::vector<double> w(atoms_.size());
        for (std::size_t i = 0; i < atoms_.size(); ++i) w[i] = atoms_[i].weight;
        const double total = pairwise_sum(w);
        detail::require(std::abs(total - 1.0) <= kMassTolerance,
                        "measure weights must sum to one (got " + std::to_string(total) + ")");
    }

    Space space_;
    std::vector<Atom> atoms_;
};

/// k-th raw moment: sum of w x^k.
inline double moment(const EmpiricalMeasure& m, int k) {
    detail::require(k >= 0, "moment order must be nonnegative");
    return m.integrate([k](const Atom& a) { return std::pow(a.location, k); });
}

inline double mean(const EmpiricalMeasure& m) {
    return m.integrate([](const Atom& a) { return a.location; });
}

/// One cell of a coupling between two measures on R.
struct CouplingCell {
    double from = 0.0;
    double to = 0.0;
    double mass = 0.0;
};

/// Monotone (quantile) coupling of two measures on R.
inline std::vector<CouplingCell> quantile_coupling(const EmpiricalMeasure& m0, const EmpiricalMeasure& m1) {
    detail::require(m0.space() == Space::real && m1.space() == Space::real,
                    "quantile coupling is defined for measures on R only");
    const auto a = m0.atoms();
    const auto b = m1.atoms();
    std::vector<CouplingCell> cells;
    std::size_t i = 0;
    std::size_t j = 0;
    double ra = a[0].weight;
    double rb = b[0].weight;
    // One of ra, rb is exactly zero after each step; rounding residue left
    // on the final atom (order 1e-16) is dropped.
    for (;;) {
        const double mass = std::min(ra, rb);
        if (mass > 0.0) cells.push_back({a[i].location, b[j].location, mass});
        ra -= mass;
        rb -= mass;
        if (ra <= rb) {
            if (++i == a.size()) break;
            ra = a[i].weight;
        } else {
            if (++j == b.size()) break;
            rb = b[j].weight;
        }
    }
    return cells;
}

/// p-Wasserstein distance, p in {1,2}. On R the quantile formula is exact;
/// on S the ground cost is |x - x'|^2 + 1{flags differ}, raised to p/2.
inline double wasserstein(const EmpiricalMeasure& m0, const EmpiricalMeasure& m1, int order) {
    detail::require(order == 1 || order == 2, "Wasserstein order must be 1 or 2");
    if (m0.space() != m1.space())
        throw PreconditionError("Wasserstein distance between measures on different spaces");
    const double p = static_cast<double>(order);
    if (m0.space() == Space::real) {
        const auto cells = quantile_coupling(m0, m1);
        std::vector<double> terms(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c)
            terms[c] = cells[c].mass * std::pow(std::abs(cells[c].from - cells[c].to), p);
        return std::pow(std::max(pairwise_sum(terms), 0.0), 1.0 / p);
    }
    const auto a = m0.atoms();
    const auto b = m1.atoms();
    std::vector<double> supply(a.size());
    std::vector<double> demand(b.size());
    std::vector<double> cost(a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i) supply[i] = a[i].weight;
    for (std::size_t j = 0; j < b.size(); ++j) demand[j] = b[j].weight;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double dx = a[i].location - b[j].location;
            const double ground = dx * dx + (a[i].alive != b[j].alive ? 1.0 : 0.0);
            cost[i * b.size() + j] = std::pow(ground, p / 2.0);
        }
    return std::pow(std::max(min_cost_transport(supply, demand, cost), 0.0), 1.0 / p);
}

/// Convex combination (1 - lambda) m0 + lambda m1.
inline EmpiricalMeasure mix(const EmpiricalMeasure& m0, const EmpiricalMeasure& m1, double lambda) {
    detail::require(lambda >= 0.0 && lambda <= 1.0, "mixing weight must lie in [0,1]");
    detail::require(m0.space() == m1.space(), "cannot mix measures on different spaces");
    if (lambda == 0.0) return m0;
    if (lambda == 1.0) return m1;
    std::vector<Atom> atoms;
    atoms.reserve(m0.size() + m1.size());
    for (const auto& a : m0.atoms()) atoms.push_back({a.location, (1.0 - lambda) * a.weight, a.alive});
    for (const auto& a : m1.atoms()) atoms.push_back({a.location, lambda * a.weight, a.alive});
    return EmpiricalMeasure(m0.space(), std::move(atoms));
}

/// Image of m under x -> shift(x); flags are carried along.
inline EmpiricalMeasure pushforward(const EmpiricalMeasure& m, const std::function<double(double)>& shift) {
    std::vector<Atom> atoms(m.atoms().begin(), m.atoms().end());
    for (auto& a : atoms) a.location = shift(a.location);
    return EmpiricalMeasure(m.space(), std::move(atoms));
}

/// Writes one "location,weight[,alive]" line per atom.
inline void write_csv(std::ostream& os, const EmpiricalMeasure& m) {
    std::ostringstream line;
    line.precision(17);
    for (const auto& a : m.atoms()) {
        line.str("");
        line << a.location << ',' << a.weight;
        if (m.space() == Space::flagged) line << ',' << (a.alive ? 1 : 0);
        os << line.str() << '\n';
    }
}

inline EmpiricalMeasure read_csv(std::istream& is) {
    std::vector<Atom> atoms;
    bool flagged = false;
    bool first = true;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        detail::require(fields.size() == 2 || fields.size() == 3, "bad measure CSV line: " + line);
        if (first) flagged = fields.size() == 3;
        detail::require(flagged == (fields.size() == 3), "mixed measure CSV line widths");
        first = false;
        Atom a{std::stod(fields[0]), std::stod(fields[1]), flagged && std::stoi(fields[2]) != 0};
        atoms.push_back(a);
    }
    return EmpiricalMeasure(flagged ? Space::flagged : Space::real, std::move(atoms));
}

}  // namespace mfito

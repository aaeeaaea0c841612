#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mfito/control.hpp"
#include "mfito/errors.hpp"
#include "mfito/functional.hpp"
#include "mfito/lattice.hpp"
#include "mfito/model.hpp"
#include "mfito/parallel.hpp"
#include "mfito/summation.hpp"

namespace mfito {

/// Particles live on S = R x {0,1}; only alive ones move or earn f.
struct StoppingProblemSpec {
    Coefficient b = Coefficient::zero();
    Coefficient sigma = Coefficient::zero();
    Coefficient sigma0 = Coefficient::zero();  // shared by all alive particles
    Coefficient f = Coefficient::zero();
    CylindricalFunctional g;  // evaluated on the locations of the final measure
    double horizon = 1.0;
    double h = 0.1;
    double x0 = 0.0;
    double spacing = 0.1;
    std::size_t points = 11;
    std::size_t particles = 2;
    std::size_t budget = 2'000'000;
    std::size_t jobs = 1;
    std::string description;
};

namespace detail {

inline std::vector<std::size_t> alive_positions(const ValueTable& t, const LatticeConfig& c) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (t.alive(c[i])) out.push_back(i);
    return out;
}

inline LatticeConfig stop_subset(const ValueTable& t, LatticeConfig c, const std::vector<std::size_t>& alive,
                                 std::size_t mask) {
    for (std::size_t k = 0; k < alive.size(); ++k)
        if ((mask >> k) & 1) c[alive[k]] = t.encode(t.cell(c[alive[k]]), false);
    return sorted(std::move(c));
}

inline MeasureView view_of(const std::vector<double>& xs) { return MeasureView::of(xs); }

/// Value of continuing one step from a configuration whose stop decisions are made.
inline double continuation(const ValueTable& t, const StoppingProblemSpec& spec, std::size_t k, const LatticeConfig& c,
                           const MultisetIndex& next_idx, double& worst) {
    const double tk = t.time(k);
    const auto xs = t.locations(c);
    const MeasureView m = view_of(xs);
    const auto alive = alive_positions(t, c);
    std::vector<double> reward(c.size(), 0.0);
    std::vector<long> drift(c.size(), 0), kick(c.size(), 0);
    const double sq = std::sqrt(spec.h);
    long common = 0;
    for (std::size_t i : alive) {
        reward[i] = spec.f(tk, m, xs[i]);
        drift[i] = to_cells(spec.b(tk, m, xs[i]) * spec.h, t.spacing, worst);
        kick[i] = to_cells(std::abs(spec.sigma(tk, m, xs[i])) * sq, t.spacing, worst);
    }
    if (!alive.empty()) {
        // The shared kick uses the first alive particle's coefficient; constant sigma0 is the supported case.
        common = to_cells(std::abs(spec.sigma0(tk, m, xs[alive.front()])) * sq, t.spacing, worst);
    }
    std::vector<std::size_t> movers;
    for (std::size_t i : alive)
        if (kick[i] != 0) movers.push_back(i);
    const std::size_t common_branches = common != 0 ? 2 : 1;
    const std::size_t count = (std::size_t{1} << movers.size()) * common_branches;
    const double p = 1.0 / static_cast<double>(count);
    std::vector<double> terms;
    terms.reserve(count);
    for (std::size_t cm = 0; cm < common_branches; ++cm) {
        const long shared = common_branches == 2 ? (cm ? common : -common) : 0;
        for (std::size_t mask = 0; mask < (std::size_t{1} << movers.size()); ++mask) {
            LatticeConfig nx = c;
            for (std::size_t i : alive) nx[i] = t.encode(t.cell(c[i]) + drift[i] + shared, true);
            for (std::size_t j = 0; j < movers.size(); ++j) {
                const std::size_t i = movers[j];
                nx[i] = t.encode(t.cell(nx[i]) + ((mask >> j) & 1 ? kick[i] : -kick[i]), true);
            }
            terms.push_back(p * t.slices[k + 1].value[t.rank(k + 1, sorted(std::move(nx)), next_idx)]);
        }
    }
    return pairwise_mean(reward) * spec.h + pairwise_sum(terms);
}

}  // namespace detail

/// Backward recursion over per-particle stop/continue decisions. The decision
/// stored per state is the bitmask of stopped positions among the sorted codes.
inline ValueTable solve_stopping_dp(const StoppingProblemSpec& spec) {
    detail::require(spec.particles >= 1 && spec.particles <= 20, "stopping DP supports 1 to 20 particles");
    detail::require(spec.points >= 1 && spec.spacing > 0.0, "need lattice points and a positive spacing");
    ValueTable t;
    t.kind = "stopping";
    t.flagged = true;
    t.config_hash = detail::fnv1a(spec.description);
    t.particles = spec.particles;
    t.x0 = spec.x0;
    t.spacing = spec.spacing;
    t.h = spec.h;
    t.steps = detail::step_count(spec.horizon, spec.h);
    t.base_points = spec.points;
    t.growth = detail::bound_cells(spec.b.bound * spec.h + (spec.sigma.bound + spec.sigma0.bound) * std::sqrt(spec.h),
                                   spec.spacing);
    detail::allocate_slices(t, spec.budget);

    const std::size_t K = t.steps;
    {
        const auto idx = t.index(K);
        auto& s = t.slices[K];
        for (std::uint64_t r = 0; r < idx.size(); ++r) {
            const auto c = t.unrank(K, r, idx);
            s.value[r] = spec.g.value(EmpiricalMeasure::uniform(t.locations(c)));
            s.decision[r] = static_cast<std::int32_t>((std::size_t{1} << detail::alive_positions(t, c).size()) - 1);
        }
    }
    std::vector<double> cont, worst;
    for (std::size_t k = K; k-- > 0;) {
        const auto idx = t.index(k);
        const auto next_idx = t.index(k + 1);
        auto& s = t.slices[k];
        cont.assign(s.value.size(), 0.0);
        worst.assign(s.value.size(), 0.0);
        parallel_for(s.value.size(), spec.jobs, [&](std::size_t r) {
            cont[r] = detail::continuation(t, spec, k, t.unrank(k, r, idx), next_idx, worst[r]);
        });
        parallel_for(s.value.size(), spec.jobs, [&](std::size_t r) {
            const auto c = t.unrank(k, r, idx);
            const auto alive = detail::alive_positions(t, c);
            double best = -std::numeric_limits<double>::infinity();
            std::int32_t arg = 0;
            for (std::size_t mask = 0; mask < (std::size_t{1} << alive.size()); ++mask) {
                const double v = cont[t.rank(k, detail::stop_subset(t, c, alive, mask), idx)];
                if (v > best) {
                    best = v;
                    arg = static_cast<std::int32_t>(mask);
                }
            }
            s.value[r] = best;
            s.decision[r] = arg;
        });
        for (double w : worst) t.rounding_error = std::max(t.rounding_error, w);
    }
    return t;
}

struct ObstacleReport {
    std::size_t alive = 0;
    double min_DI = 0.0;            // min over alive particles of N [V(m) - V(flip)]
    double min_neg_LV = 0.0;        // min over pure stopping sets of -LV(m')
    std::size_t stopping_sets = 0;
    double value_gap = 0.0;         // |V(m) - V(m*)| at the DP decision m*
    double LV_at_optimum = 0.0;     // |LV(m*)|
    double stopped_pair_term = 0.0; // common-noise pair term over alive-stopped pairs, not in LV
    double tolerance = 0.0;
    bool pass = false;
};

namespace detail {

inline LatticeConfig move_code(const ValueTable& t, LatticeConfig c, std::size_t i, long d) {
    c[i] = t.encode(t.cell(c[i]) + d, t.alive(c[i]));
    return sorted(std::move(c));
}

inline LatticeConfig move_pair(const ValueTable& t, LatticeConfig c, std::size_t i, long di, std::size_t j, long dj) {
    c[i] = t.encode(t.cell(c[i]) + di, t.alive(c[i]));
    c[j] = t.encode(t.cell(c[j]) + dj, t.alive(c[j]));
    return sorted(std::move(c));
}

struct Generator {
    double value = 0.0;
    double stopped_pairs = 0.0;
};

/// Empirical-projection obstacle operator at slice k: forward time difference,
/// alive-mass drift and diffusion, and the alive-alive common-noise pair term.
inline Generator obstacle_generator(const ValueTable& t, const StoppingProblemSpec& spec, std::size_t k,
                                    const LatticeConfig& c) {
    const double N = static_cast<double>(t.particles);
    const double d = t.spacing;
    const double tk = t.time(k);
    const double v = t.value(k, c);
    const auto xs = t.locations(c);
    const MeasureView m = MeasureView::of(xs);
    const auto alive = alive_positions(t, c);
    std::vector<double> single;
    for (std::size_t i : alive) {
        const double up = t.value(k, move_code(t, c, i, 1));
        const double dn = t.value(k, move_code(t, c, i, -1));
        const double d1 = N * (up - dn) / (2.0 * d);
        const double d2 = N * (up - 2.0 * v + dn) / (d * d);
        const double sg = spec.sigma(tk, m, xs[i]);
        const double s0 = spec.sigma0(tk, m, xs[i]);
        single.push_back(spec.f(tk, m, xs[i]) + spec.b(tk, m, xs[i]) * d1 + 0.5 * (sg * sg + s0 * s0) * d2);
    }
    auto mixed = [&](std::size_t i, std::size_t j) {
        const double pp = t.value(k, move_pair(t, c, i, 1, j, 1));
        const double pm = t.value(k, move_pair(t, c, i, 1, j, -1));
        const double mp = t.value(k, move_pair(t, c, i, -1, j, 1));
        const double mm = t.value(k, move_pair(t, c, i, -1, j, -1));
        return N * N * (pp - pm - mp + mm) / (4.0 * d * d);
    };
    std::vector<double> pairs, stopped;
    for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = 0; j < c.size(); ++j) {
            if (i == j) continue;
            const bool ai = t.alive(c[i]);
            const bool aj = t.alive(c[j]);
            if (!ai && !aj) continue;
            const double s = spec.sigma0(tk, m, xs[i]) * spec.sigma0(tk, m, xs[j]);
            if (s == 0.0) continue;
            (ai && aj ? pairs : stopped).push_back(0.5 * s * mixed(i, j) / (N * N));
        }
    Generator out;
    const double dt = (t.value(k + 1, c) - v) / spec.h;
    out.value = dt + pairwise_sum(single) / N + pairwise_sum(pairs);
    out.stopped_pairs = pairwise_sum(stopped);
    return out;
}

}  // namespace detail

/// Checks D_I V >= -tol, -LV(m') >= -tol on pure stopping sets m' of m, and
/// |LV| <= tol at the DP's chosen m' (which preserves the value).
inline ObstacleReport obstacle_residual(const ValueTable& t, const StoppingProblemSpec& spec, std::size_t k,
                                        const LatticeConfig& c, double c1 = 8.0, double c2 = 1.0) {
    detail::require(t.flagged, "obstacle residual needs a stopping table");
    detail::require(k < t.steps, "obstacle residual needs an interior time index");
    const double N = static_cast<double>(t.particles);
    ObstacleReport r;
    r.tolerance = c1 * spec.h + c2 / N;
    const double v = t.value(k, c);
    const auto alive = detail::alive_positions(t, c);
    r.alive = alive.size();
    if (!alive.empty()) {
        r.min_DI = std::numeric_limits<double>::infinity();
        for (std::size_t i : alive) {
            LatticeConfig flip = c;
            flip[i] = t.encode(t.cell(c[i]), false);
            r.min_DI = std::min(r.min_DI, N * (v - t.value(k, detail::sorted(std::move(flip)))));
        }
    }
    r.min_neg_LV = std::numeric_limits<double>::infinity();
    for (std::size_t mask = 0; mask < (std::size_t{1} << alive.size()); ++mask) {
        const auto m2 = detail::stop_subset(t, c, alive, mask);
        r.min_neg_LV = std::min(r.min_neg_LV, -detail::obstacle_generator(t, spec, k, m2).value);
        ++r.stopping_sets;
    }
    const auto chosen = detail::stop_subset(t, c, alive, static_cast<std::size_t>(t.decision(k, c)));
    r.value_gap = std::abs(v - t.value(k, chosen));
    const auto gen = detail::obstacle_generator(t, spec, k, chosen);
    r.LV_at_optimum = std::abs(gen.value);
    r.stopped_pair_term = gen.stopped_pairs;
    r.pass = r.min_DI >= -r.tolerance && r.min_neg_LV >= -r.tolerance && r.value_gap <= 1e-12 &&
             r.LV_at_optimum <= r.tolerance;
    return r;
}

struct MonotonicityReport {
    std::size_t pairs = 0;
    std::size_t violations = 0;
    double worst = 0.0;  // max of V(m') - V(m)
};

/// V(t, m) >= V(t, m') over every state m of slice k and every pure stopping set m'.
inline MonotonicityReport monotonicity_violations(const ValueTable& t, std::size_t k, double tol = 1e-12) {
    detail::require(t.flagged && k < t.slices.size(), "monotonicity check needs a stopping table slice");
    MonotonicityReport out;
    const auto idx = t.index(k);
    const auto& s = t.slices[k];
    for (std::uint64_t r = 0; r < idx.size(); ++r) {
        const auto c = t.unrank(k, r, idx);
        const auto alive = detail::alive_positions(t, c);
        for (std::size_t mask = 1; mask < (std::size_t{1} << alive.size()); ++mask) {
            const double gap = s.value[t.rank(k, detail::stop_subset(t, c, alive, mask), idx)] - s.value[r];
            ++out.pairs;
            out.worst = std::max(out.worst, gap);
            if (gap > tol) ++out.violations;
        }
    }
    return out;
}

}  // namespace mfito

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "mfito/errors.hpp"
#include "mfito/functional.hpp"
#include "mfito/lattice.hpp"
#include "mfito/model.hpp"
#include "mfito/parallel.hpp"
#include "mfito/summation.hpp"

namespace mfito {

/// Coefficients under one control value. Common jumps shift every particle
/// by gamma * y, y ~ nu0, at constant rate lambda.
struct ControlAction {
    double value = 0.0;
    Coefficient b = Coefficient::zero();
    Coefficient sigma = Coefficient::zero();
    Coefficient f = Coefficient::zero();  // running reward
    double gamma = 0.0;
    double lambda = 0.0;
};

struct ControlProblemSpec {
    std::vector<ControlAction> actions;
    DiscreteLaw nu0;
    CylindricalFunctional g;  // terminal reward
    double horizon = 1.0;
    double h = 0.1;
    double x0 = 0.0;          // lattice origin
    double spacing = 0.1;
    std::size_t points = 11;  // base lattice size
    std::size_t particles = 2;
    std::size_t budget = 2'000'000;
    std::size_t jobs = 1;
    std::string description;  // hashed into exported tables
};

namespace detail {

inline std::size_t step_count(double horizon, double h) {
    require(h > 0.0 && horizon >= 0.0, "time step must be positive and the horizon nonnegative");
    const double k = horizon / h;
    const long r = std::lround(k);
    require(std::abs(k - static_cast<double>(r)) <= 1e-9, "horizon must be a multiple of the time step");
    return static_cast<std::size_t>(r);
}

/// Rounds a displacement to whole cells, tracking the worst rounding error.
inline long to_cells(double dx, double spacing, double& worst) {
    const double u = dx / spacing;
    const long j = std::lround(u);
    worst = std::max(worst, std::abs(u - static_cast<double>(j)) * spacing);
    return j;
}

inline long bound_cells(double displacement, double spacing) {
    require(std::isfinite(displacement), "coefficient bounds must be finite to size the lattice");
    return static_cast<long>(std::ceil(displacement / spacing - 1e-9));
}

struct Branch {
    double prob;
    LatticeConfig next;
};

inline LatticeConfig sorted(LatticeConfig c) {
    std::sort(c.begin(), c.end());
    return c;
}

/// One-step transition of the controlled lattice chain under a uniform control.
inline std::vector<Branch> control_branches(const ControlProblemSpec& spec, const ControlAction& a, double t,
                                            const LatticeConfig& c, double spacing, double& worst) {
    const std::size_t n = c.size();
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = spec.x0 + spacing * static_cast<double>(c[i]);
    const MeasureView m = MeasureView::of(xs);
    std::vector<Branch> out;
    const double pj = a.lambda * spec.h;
    if (pj > 0.0)
        for (std::size_t y = 0; y < spec.nu0.values.size(); ++y) {
            const long s = to_cells(a.gamma * spec.nu0.values[y], spacing, worst);
            LatticeConfig nx = c;
            for (auto& v : nx) v += s;
            out.push_back({pj * spec.nu0.probs[y], std::move(nx)});
        }
    std::vector<long> drift(n), kick(n);
    const double sq = std::sqrt(spec.h);
    for (std::size_t i = 0; i < n; ++i) {
        drift[i] = to_cells(a.b(t, m, xs[i]) * spec.h, spacing, worst);
        kick[i] = to_cells(std::abs(a.sigma(t, m, xs[i])) * sq, spacing, worst);
    }
    std::vector<std::size_t> movers;
    for (std::size_t i = 0; i < n; ++i)
        if (kick[i] != 0) movers.push_back(i);
    const double pd = (1.0 - pj) / static_cast<double>(std::size_t{1} << movers.size());
    for (std::size_t mask = 0; mask < (std::size_t{1} << movers.size()); ++mask) {
        LatticeConfig nx = c;
        for (std::size_t i = 0; i < n; ++i) nx[i] += drift[i];
        for (std::size_t k = 0; k < movers.size(); ++k) nx[movers[k]] += (mask >> k) & 1 ? kick[movers[k]] : -kick[movers[k]];
        out.push_back({pd, sorted(std::move(nx))});
    }
    return out;
}

inline double mean_reward(const Coefficient& f, double t, const std::vector<double>& xs) {
    const MeasureView m = MeasureView::of(xs);
    std::vector<double> v(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) v[i] = f(t, m, xs[i]);
    return pairwise_mean(v);
}

inline double expected_next(const ValueTable& t, std::size_t k1, const std::vector<Branch>& branches,
                            const MultisetIndex& idx) {
    std::vector<double> terms(branches.size());
    for (std::size_t b = 0; b < branches.size(); ++b)
        terms[b] = branches[b].prob * t.slices[k1].value[t.rank(k1, branches[b].next, idx)];
    return pairwise_sum(terms);
}

/// Value of one control at one state: mean f h + E V(t + h, next).
inline double control_value(const ValueTable& t, const ControlProblemSpec& spec, std::size_t k,
                            const LatticeConfig& c, const ControlAction& a, const MultisetIndex& next_idx,
                            double& worst) {
    const double tk = t.time(k);
    const auto branches = control_branches(spec, a, tk, c, t.spacing, worst);
    return mean_reward(a.f, tk, t.locations(c)) * spec.h + expected_next(t, k + 1, branches, next_idx);
}

}  // namespace detail

/// Backward dynamic programming over exchangeable N-particle configurations.
inline ValueTable solve_mfc_dp(const ControlProblemSpec& spec) {
    detail::require(!spec.actions.empty(), "control set must not be empty");
    detail::require(spec.particles >= 1 && spec.points >= 1, "need at least one particle and one lattice point");
    detail::require(spec.spacing > 0.0, "lattice spacing must be positive");
    spec.nu0.validate();
    ValueTable t;
    t.kind = "control";
    t.config_hash = detail::fnv1a(spec.description);
    t.particles = spec.particles;
    t.x0 = spec.x0;
    t.spacing = spec.spacing;
    t.h = spec.h;
    t.steps = detail::step_count(spec.horizon, spec.h);
    t.base_points = spec.points;
    long growth = 0;
    for (const auto& a : spec.actions) {
        detail::require(a.lambda >= 0.0 && a.lambda * spec.h <= 1.0, "common jump probability lambda h must lie in [0,1]");
        const long diff = detail::bound_cells(a.b.bound * spec.h + a.sigma.bound * std::sqrt(spec.h), spec.spacing);
        const long jump = a.lambda > 0.0 ? detail::bound_cells(std::abs(a.gamma) * spec.nu0.max_abs(), spec.spacing) : 0;
        growth = std::max({growth, diff, jump});
    }
    t.growth = growth;
    detail::allocate_slices(t, spec.budget);

    const std::size_t K = t.steps;
    {
        const auto idx = t.index(K);
        auto& s = t.slices[K];
        for (std::uint64_t r = 0; r < idx.size(); ++r) s.value[r] = spec.g.value(t.measure(t.unrank(K, r, idx)));
    }
    std::vector<double> worst_per_state;
    for (std::size_t k = K; k-- > 0;) {
        const auto idx = t.index(k);
        const auto next_idx = t.index(k + 1);
        auto& s = t.slices[k];
        worst_per_state.assign(s.value.size(), 0.0);
        parallel_for(s.value.size(), spec.jobs, [&](std::size_t r) {
            const auto c = t.unrank(k, r, idx);
            double best = -std::numeric_limits<double>::infinity();
            std::int32_t arg = -1;
            for (std::size_t a = 0; a < spec.actions.size(); ++a) {
                const double v = detail::control_value(t, spec, k, c, spec.actions[a], next_idx, worst_per_state[r]);
                if (v > best) {
                    best = v;
                    arg = static_cast<std::int32_t>(a);
                }
            }
            s.value[r] = best;
            s.decision[r] = arg;
        });
        for (double w : worst_per_state) t.rounding_error = std::max(t.rounding_error, w);
    }
    return t;
}

namespace detail {

inline LatticeConfig shifted(LatticeConfig c, std::size_t i, long d) {
    c[i] += d;
    return sorted(std::move(c));
}

/// Empirical-projection derivatives d_x delta V and d_xx delta V at particle i.
inline std::pair<double, double> projected_derivatives(const ValueTable& t, std::size_t k, const LatticeConfig& c,
                                                       std::size_t i) {
    const double N = static_cast<double>(t.particles);
    const double v = t.value(k, c);
    const double up = t.value(k, shifted(c, i, 1));
    const double dn = t.value(k, shifted(c, i, -1));
    const double d = t.spacing;
    return {N * (up - dn) / (2.0 * d), N * (up - 2.0 * v + dn) / (d * d)};
}

}  // namespace detail

/// Residual of -d_t V - int sup_a { f^a + L^a delta_m V + J^a[V] } dm at a
/// lattice state, with forward time differences and one-particle
/// projections of the measure derivatives.
inline double hjb_residual(const ValueTable& t, const ControlProblemSpec& spec, std::size_t k,
                           const LatticeConfig& c) {
    detail::require(k < t.steps, "HJB residual needs an interior time index");
    const double tk = t.time(k);
    const double dt_v = (t.value(k + 1, c) - t.value(k, c)) / spec.h;
    const auto xs = t.locations(c);
    const MeasureView m = MeasureView::of(xs);
    std::vector<double> sup(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto [d1, d2] = detail::projected_derivatives(t, k, c, i);
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& a : spec.actions) {
            double jump = 0.0;
            if (a.lambda > 0.0) {
                std::vector<double> terms(spec.nu0.values.size());
                double worst = 0.0;
                for (std::size_t y = 0; y < terms.size(); ++y) {
                    const long s = detail::to_cells(a.gamma * spec.nu0.values[y], t.spacing, worst);
                    LatticeConfig nx = c;
                    for (auto& v : nx) v += s;
                    terms[y] = spec.nu0.probs[y] * (t.value(k, nx) - t.value(k, c));
                }
                jump = a.lambda * pairwise_sum(terms);
            }
            const double sg = a.sigma(tk, m, xs[i]);
            const double v = a.f(tk, m, xs[i]) + a.b(tk, m, xs[i]) * d1 + 0.5 * sg * sg * d2 + jump;
            best = std::max(best, v);
        }
        sup[i] = best;
    }
    return -dt_v - pairwise_mean(sup);
}

enum class StopRule { next_step, horizon, first_common_jump };

/// |V(t, c) - E[int f + V(tau, c_tau)]|. For next_step the maximum over
/// controls is taken explicitly; for the other rules the chain is enumerated
/// forward under the table's optimal controls.
inline double dpp_check(const ValueTable& t, const ControlProblemSpec& spec, std::size_t k, const LatticeConfig& c,
                        StopRule rule) {
    detail::require(k <= t.steps, "time index beyond the table");
    const double v = t.value(k, c);
    if (k == t.steps) return 0.0;
    double worst = 0.0;
    if (rule == StopRule::next_step) {
        const auto next_idx = t.index(k + 1);
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& a : spec.actions)
            best = std::max(best, detail::control_value(t, spec, k, c, a, next_idx, worst));
        return std::abs(v - best);
    }
    std::map<LatticeConfig, double> dist{{c, 1.0}};
    std::vector<double> collected;
    for (std::size_t j = k; j < t.steps; ++j) {
        std::map<LatticeConfig, double> next;
        for (const auto& [cfg, p] : dist) {
            const auto& a = spec.actions[static_cast<std::size_t>(t.decision(j, cfg))];
            collected.push_back(p * detail::mean_reward(a.f, t.time(j), t.locations(cfg)) * spec.h);
            const auto branches = detail::control_branches(spec, a, t.time(j), cfg, t.spacing, worst);
            const std::size_t jumps = a.lambda > 0.0 ? spec.nu0.values.size() : 0;
            for (std::size_t b = 0; b < branches.size(); ++b) {
                const double q = p * branches[b].prob;
                if (rule == StopRule::first_common_jump && b < jumps)
                    collected.push_back(q * t.value(j + 1, branches[b].next));
                else
                    next[branches[b].next] += q;
            }
        }
        dist = std::move(next);
    }
    for (const auto& [cfg, p] : dist) collected.push_back(p * t.value(t.steps, cfg));
    return std::abs(v - pairwise_sum(collected));
}

}  // namespace mfito

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mfito/errors.hpp"
#include "mfito/measure.hpp"
#include "mfito/model.hpp"
#include "mfito/random.hpp"
#include "mfito/summation.hpp"

namespace mfito {

enum class JumpKind : std::uint8_t { idiosyncratic, common };

struct JumpRecord {
    std::size_t step = 0;  // effective-grid index of the jump time
    std::uint32_t id = 0;
    JumpKind kind = JumpKind::idiosyncratic;
    double pre = 0.0;
    double post = 0.0;
};

/// One proposal of the dominating common Poisson stream.
struct CommonEvent {
    double time = 0.0;
    std::size_t step = 0;
    double mark = 0.0;
    double theta = 0.0;
    std::size_t accepted_particles = 0;
    std::size_t accepted_copies = 0;
};

/// Values of one cohort on the effective grid plus its sparse jump ledger.
struct CohortPath {
    std::size_t n = 0;
    std::vector<double> values;          // stored rows x n, step-major
    std::vector<long> row_of;            // effective-grid index -> stored row, or -1
    std::vector<JumpRecord> jumps;       // sorted by (step, kind, id)
    std::vector<std::size_t> jump_offsets;  // jumps at step e: [off[e], off[e+1])

    bool stored(std::size_t e) const { return row_of[e] >= 0; }

    std::span<const double> at(std::size_t e) const {
        if (row_of[e] < 0) throw PreconditionError("path values at this time were not stored");
        return {values.data() + static_cast<std::size_t>(row_of[e]) * n, n};
    }

    std::span<const JumpRecord> jumps_at(std::size_t e) const {
        return {jumps.data() + jump_offsets[e], jump_offsets[e + 1] - jump_offsets[e]};
    }

    /// Left limits X_{t_e-}: current values with jumped entries reset.
    std::vector<double> left_limit(std::size_t e) const {
        std::vector<double> x(at(e).begin(), at(e).end());
        const auto js = jumps_at(e);
        // Reverse order so a particle jumping twice at one time ends at its first pre value.
        for (auto it = js.rbegin(); it != js.rend(); ++it) x[it->id] = it->pre;
        return x;
    }
};

struct SimulationOptions {
    /// Negative control: copies reuse the particles' idiosyncratic jump streams.
    bool shared_jump_stream = false;
    /// When false only base-grid rows are kept; the jump ledger is always complete.
    bool store_paths = true;
};

struct ScenarioPath {
    std::shared_ptr<const ModelSpec> spec;
    std::uint64_t seed = 0;
    double dt = 0.0;
    std::vector<double> times;        // effective grid
    std::vector<char> on_base_grid;   // 1 if times[e] is a multiple of dt (or T)
    std::vector<double> dW0;          // increments over [times[e], times[e+1]]
    std::vector<double> W0;           // cumulative common Brownian path
    std::vector<CommonEvent> common;  // every common proposal
    CohortPath particles;
    CohortPath copies;

    std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
    std::size_t n() const { return particles.n; }

    /// Index e with times[e] <= t, choosing the exact grid point when t is on the grid.
    std::size_t index_at(double t) const {
        detail::require(t >= 0.0 && t <= times.back() + 1e-12, "time outside the simulated horizon");
        const auto it = std::upper_bound(times.begin(), times.end(), t + 1e-12);
        return static_cast<std::size_t>(it - times.begin()) - 1;
    }
};

namespace detail {

inline double checked(const char* name, const Coefficient& c, double t, const MeasureView& m, double x) {
    if (c.constant) return *c.constant;
    const double v = c.fn(t, m, x);
    if (!(std::abs(v) <= c.bound))
        throw BoundViolation(std::string(name) + " = " + std::to_string(v) + " exceeds its declared bound " +
                             std::to_string(c.bound) + " at " + ModelSpec::where(t, m, x));
    return v;
}

inline double checked_rate(const char* name, const Coefficient& c, double t, const MeasureView& m, double x) {
    const double v = c.constant ? *c.constant : c.fn(t, m, x);
    if (!(v >= 0.0 && v <= c.bound))
        throw BoundViolation(std::string(name) + " = " + std::to_string(v) + " violates 0 <= rate <= " +
                             std::to_string(c.bound) + " at " + ModelSpec::where(t, m, x));
    return v;
}

struct Proposal {
    double time;
    double mark;
    double theta;
};

inline std::vector<Proposal> poisson_proposals(Stream s, double rate, double horizon, const DiscreteLaw& law) {
    std::vector<Proposal> out;
    if (rate <= 0.0) return out;
    double t = 0.0;
    for (;;) {
        t += s.exponential(rate);
        if (t > horizon) break;
        const double mark = law.sample(s.uniform());
        out.push_back({t, mark, s.uniform()});
    }
    return out;
}

/// Brownian increments on the effective grid. The endpoint of every base
/// interval is drawn first and interior event times are filled by a bridge,
/// so values on the base grid do not depend on which events were inserted.
inline std::vector<double> brownian_increments(const CounterRng& rng, Purpose purpose, std::uint32_t entity,
                                               const std::vector<double>& times,
                                               const std::vector<char>& on_base) {
    std::vector<double> inc(times.size() - 1);
    std::size_t start = 0;
    std::uint64_t k = 0;
    while (start + 1 < times.size()) {
        std::size_t end = start + 1;
        while (!on_base[end]) ++end;
        const double a = times[start];
        const double b = times[end];
        const double total = std::sqrt(b - a) * rng.normal(purpose, entity, k << 24);
        double w = 0.0;  // bridge value relative to times[start]
        for (std::size_t e = start; e < end; ++e) {
            double next = total;
            if (e + 1 < end) {
                const double c = times[e];
                const double s = times[e + 1];
                const double mu = w + (s - c) / (b - c) * (total - w);
                const double var = (s - c) * (b - s) / (b - c);
                next = mu + std::sqrt(std::max(var, 0.0)) * rng.normal(purpose, entity, (k << 24) | (e - start + 1));
            }
            inc[e] = next - w;
            w = next;
        }
        start = end;
        ++k;
    }
    return inc;
}

}  // namespace detail

/// Simulates n particles and n conditional copies sharing one common-noise path.
inline ScenarioPath simulate(std::shared_ptr<const ModelSpec> spec_ptr, std::size_t n_particles, double dt,
                             std::uint64_t seed, const SimulationOptions& opt = {}) {
    detail::require(spec_ptr != nullptr, "simulation needs a model");
    const ModelSpec& spec = *spec_ptr;
    detail::require(dt > 0.0 && std::isfinite(dt), "time step must be positive");
    detail::require(n_particles >= 2, "simulation needs at least two particles (got " + std::to_string(n_particles) + ")");
    detail::require(n_particles < (1u << 31), "too many particles");
    spec.validate();

    const CounterRng rng(seed);
    const double T = spec.horizon;
    const std::size_t n = n_particles;
    ScenarioPath path;
    path.spec = spec_ptr;
    path.seed = seed;
    path.dt = dt;

    // Base grid.
    std::vector<double> base{0.0};
    if (T > 0.0) {
        const auto K = static_cast<std::size_t>(std::max(1.0, std::ceil(T / dt - 1e-9)));
        for (std::size_t k = 1; k < K; ++k) base.push_back(static_cast<double>(k) * dt);
        base.push_back(T);
    }

    // Proposal streams.
    const auto common = detail::poisson_proposals(Stream(rng, Purpose::common_proposals, 0), spec.Lambda0(), T, spec.nu0);
    std::vector<std::vector<detail::Proposal>> idio_p(n);
    std::vector<std::vector<detail::Proposal>> idio_c(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto id = static_cast<std::uint32_t>(i);
        idio_p[i] = detail::poisson_proposals(Stream(rng, Purpose::particle_jumps, id), spec.Lambda(), T, spec.nu);
        idio_c[i] = opt.shared_jump_stream
                        ? idio_p[i]
                        : detail::poisson_proposals(Stream(rng, Purpose::copy_jumps, id), spec.Lambda(), T, spec.nu);
    }

    // Effective grid: base grid plus every proposal time.
    std::vector<double> times = base;
    for (const auto& p : common) times.push_back(p.time);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& p : idio_p[i]) times.push_back(p.time);
        for (const auto& p : idio_c[i]) times.push_back(p.time);
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::vector<char> on_base(times.size(), 0);
    for (double t : base) on_base[static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), t) - times.begin())] = 1;
    const std::size_t steps = times.size() - 1;
    auto step_of = [&](double t) {
        return static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), t) - times.begin());
    };

    // Per-step proposal lists: (cohort 0/1, id, proposal).
    struct Pending {
        int cohort;
        std::uint32_t id;
        detail::Proposal p;
    };
    std::vector<std::vector<Pending>> idio_at(times.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& p : idio_p[i]) idio_at[step_of(p.time)].push_back({0, static_cast<std::uint32_t>(i), p});
        for (const auto& p : idio_c[i]) idio_at[step_of(p.time)].push_back({1, static_cast<std::uint32_t>(i), p});
    }
    std::vector<long> common_at(times.size(), -1);
    for (std::size_t c = 0; c < common.size(); ++c) {
        const std::size_t e = step_of(common[c].time);
        detail::require(common_at[e] < 0, "coincident common proposals");
        common_at[e] = static_cast<long>(c);
        path.common.push_back({common[c].time, e, common[c].mark, common[c].theta, 0, 0});
    }

    // Brownian increments.
    path.dW0 = spec.sigma0.is_zero() || steps == 0
                   ? std::vector<double>(steps, 0.0)
                   : detail::brownian_increments(rng, Purpose::common_brownian, 0, times, on_base);
    path.W0.assign(times.size(), 0.0);
    for (std::size_t e = 0; e < steps; ++e) path.W0[e + 1] = path.W0[e] + path.dW0[e];
    const bool idio_diffusion = !spec.sigma.is_zero() && steps > 0;
    std::vector<std::vector<double>> dW_p(idio_diffusion ? n : 0);
    std::vector<std::vector<double>> dW_c(idio_diffusion ? n : 0);
    for (std::size_t i = 0; i < dW_p.size(); ++i) {
        const auto id = static_cast<std::uint32_t>(i);
        dW_p[i] = detail::brownian_increments(rng, Purpose::particle_brownian, id, times, on_base);
        dW_c[i] = detail::brownian_increments(rng, Purpose::copy_brownian, id, times, on_base);
    }

    // Initial placement.
    std::vector<double> x0(n);
    {
        const auto atoms = spec.m0.atoms();
        Stream init(rng, Purpose::generator, 0);
        std::vector<double> cdf;
        double c = 0.0;
        for (const auto& a : atoms) cdf.push_back(c += a.weight);
        auto quantile = [&](double u) {
            const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
            return atoms[std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), atoms.size() - 1)].location;
        };
        for (std::size_t i = 0; i < n; ++i)
            x0[i] = spec.placement == InitialPlacement::quantile ? quantile((static_cast<double>(i) + 0.5) / n)
                                                                 : quantile(init.uniform());
    }
    std::vector<double> xc0 = x0;
    if (spec.placement == InitialPlacement::sample) {
        Stream init(rng, Purpose::generator, 1);
        const auto atoms = spec.m0.atoms();
        for (std::size_t i = 0; i < n; ++i) {
            double u = init.uniform();
            double c = 0.0;
            xc0[i] = atoms.back().location;
            for (const auto& a : atoms)
                if (u <= (c += a.weight)) {
                    xc0[i] = a.location;
                    break;
                }
        }
    }

    path.times = times;
    path.on_base_grid = on_base;
    CohortPath& P = path.particles;
    CohortPath& C = path.copies;
    P.n = C.n = n;
    long rows = 0;
    P.row_of.assign(times.size(), -1);
    for (std::size_t e = 0; e < times.size(); ++e)
        if (opt.store_paths || on_base[e]) P.row_of[e] = rows++;
    C.row_of = P.row_of;
    P.values.resize(static_cast<std::size_t>(rows) * n);
    C.values.resize(static_cast<std::size_t>(rows) * n);
    std::copy(x0.begin(), x0.end(), P.values.begin());
    std::copy(xc0.begin(), xc0.end(), C.values.begin());

    std::vector<double> xp(x0);
    std::vector<double> xc(xc0);
    for (std::size_t e = 0; e < steps; ++e) {
        const double t = times[e];
        const double h = times[e + 1] - t;
        const MeasureView m = MeasureView::of(xp);
        const double dw0 = path.dW0[e];
        auto euler = [&](double x, double dw) {
            double nx = x + detail::checked("b", spec.b, t, m, x) * h;
            if (idio_diffusion) nx += detail::checked("sigma", spec.sigma, t, m, x) * dw;
            if (dw0 != 0.0) nx += detail::checked("sigma0", spec.sigma0, t, m, x) * dw0;
            return nx;
        };
        std::vector<double> np(n);
        std::vector<double> nc(n);
        for (std::size_t i = 0; i < n; ++i) {
            np[i] = euler(xp[i], idio_diffusion ? dW_p[i][e] : 0.0);
            nc[i] = euler(xc[i], idio_diffusion ? dW_c[i][e] : 0.0);
        }

        // Jumps at times[e+1], all evaluated at the left limit m_{t-}.
        const std::size_t s = e + 1;
        const double ts = times[s];
        const std::vector<double> pre_p = np;
        const MeasureView mminus = MeasureView::of(pre_p);
        if (common_at[s] >= 0) {
            CommonEvent& ev = path.common[static_cast<std::size_t>(common_at[s])];
            const double L0 = spec.Lambda0();
            auto apply = [&](std::vector<double>& x, const std::vector<double>& pre, CohortPath& cohort, std::size_t& count) {
                for (std::size_t i = 0; i < n; ++i) {
                    const double rate = detail::checked_rate("lambda0", spec.lambda0, ts, mminus, pre[i]);
                    if (ev.theta * L0 <= rate) {
                        const double post = pre[i] + detail::checked("gamma0", spec.gamma0, ts, mminus, pre[i]) * ev.mark;
                        cohort.jumps.push_back({s, static_cast<std::uint32_t>(i), JumpKind::common, pre[i], post});
                        x[i] = post;
                        ++count;
                    }
                }
            };
            const std::vector<double> pre_c = nc;
            apply(np, pre_p, P, ev.accepted_particles);
            apply(nc, pre_c, C, ev.accepted_copies);
        }
        for (const auto& pd : idio_at[s]) {
            std::vector<double>& x = pd.cohort == 0 ? np : nc;
            CohortPath& cohort = pd.cohort == 0 ? P : C;
            const double pre = x[pd.id];
            const double rate = detail::checked_rate("lambda", spec.lambda, ts, mminus, pre);
            if (pd.p.theta * spec.Lambda() <= rate) {
                const double post = pre + detail::checked("gamma", spec.gamma, ts, mminus, pre) * pd.p.mark;
                cohort.jumps.push_back({s, pd.id, JumpKind::idiosyncratic, pre, post});
                x[pd.id] = post;
            }
        }
        xp.swap(np);
        xc.swap(nc);
        if (P.row_of[s] >= 0) {
            const auto off = static_cast<std::ptrdiff_t>(static_cast<std::size_t>(P.row_of[s]) * n);
            std::copy(xp.begin(), xp.end(), P.values.begin() + off);
            std::copy(xc.begin(), xc.end(), C.values.begin() + off);
        }
    }

    for (CohortPath* cp : {&P, &C}) {
        cp->jump_offsets.assign(times.size() + 1, 0);
        for (const auto& j : cp->jumps) ++cp->jump_offsets[j.step + 1];
        for (std::size_t e = 0; e < times.size(); ++e) cp->jump_offsets[e + 1] += cp->jump_offsets[e];
    }
    return path;
}

inline ScenarioPath simulate(const ModelSpec& spec, std::size_t n_particles, double dt, std::uint64_t seed,
                             const SimulationOptions& opt = {}) {
    return simulate(std::make_shared<const ModelSpec>(spec), n_particles, dt, seed, opt);
}

/// (m_{t-}, m_t) of the particle cohort.
inline std::pair<EmpiricalMeasure, EmpiricalMeasure> empirical_flow(const ScenarioPath& path, double t) {
    const std::size_t e = path.index_at(t);
    const auto cur = path.particles.at(e);
    EmpiricalMeasure now = EmpiricalMeasure::uniform(cur);
    if (std::abs(path.times[e] - t) > 1e-12) return {now, now};
    const auto pre = path.particles.left_limit(e);
    return {EmpiricalMeasure::uniform(pre), now};
}

/// Accepted common jumps J(m): proposals accepted by at least one particle.
inline std::vector<CommonEvent> accepted_common_jumps(const ScenarioPath& path) {
    std::vector<CommonEvent> out;
    for (const auto& ev : path.common)
        if (ev.accepted_particles > 0) out.push_back(ev);
    return out;
}

struct IntegrabilityReport {
    double drift_variation_sq = 0.0;  // mean over particles of (int |b| ds)^2
    double quadratic_variation = 0.0;  // mean of int (sigma^2 + sigma0^2) ds
    double jump_variation_sq = 0.0;    // mean of (sum |dX|)^2
    double jump_bound = 0.0;           // 2 mean (sum idio |dX|)^2 + 2 mean (sum common |dX|)^2
    double mean_idio_jumps = 0.0;      // accepted idiosyncratic jumps per particle
    bool finite = true;
};

inline IntegrabilityReport integrability_monitor(const ScenarioPath& path) {
    const ModelSpec& spec = *path.spec;
    const std::size_t n = path.n();
    std::vector<std::vector<double>> drift(n), qv(n);
    // Left-point sums over stored rows; without full storage this is the base grid.
    for (std::size_t e = 0; e < path.steps();) {
        std::size_t next = e + 1;
        while (!path.particles.stored(next)) ++next;
        const double t = path.times[e];
        const double h = path.times[next] - t;
        const auto x = path.particles.at(e);
        e = next;
        const MeasureView m = MeasureView::of(x);
        for (std::size_t i = 0; i < n; ++i) {
            drift[i].push_back(std::abs(spec.b(t, m, x[i])) * h);
            const double s = spec.sigma(t, m, x[i]);
            const double s0 = spec.sigma0(t, m, x[i]);
            qv[i].push_back((s * s + s0 * s0) * h);
        }
    }
    std::vector<double> a(n, 0.0), c(n, 0.0), cnt(n, 0.0);
    for (const auto& j : path.particles.jumps) {
        (j.kind == JumpKind::idiosyncratic ? a : c)[j.id] += std::abs(j.post - j.pre);
        if (j.kind == JumpKind::idiosyncratic) cnt[j.id] += 1.0;
    }
    std::vector<double> d2(n), q(n), j2(n), bound(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double dv = pairwise_sum(drift[i]);
        d2[i] = dv * dv;
        q[i] = pairwise_sum(qv[i]);
        j2[i] = (a[i] + c[i]) * (a[i] + c[i]);
        bound[i] = 2.0 * a[i] * a[i] + 2.0 * c[i] * c[i];
    }
    IntegrabilityReport r;
    r.drift_variation_sq = pairwise_mean(d2);
    r.quadratic_variation = pairwise_mean(q);
    r.jump_variation_sq = pairwise_mean(j2);
    r.jump_bound = pairwise_mean(bound);
    r.mean_idio_jumps = pairwise_mean(cnt);
    r.finite = std::isfinite(r.drift_variation_sq) && std::isfinite(r.quadratic_variation) &&
               std::isfinite(r.jump_variation_sq);
    return r;
}

/// Columnar dump: time,particle,value,pre,tag. Copies carry ids n..2n-1.
inline void write_dump(std::ostream& os, const ScenarioPath& path) {
    os << "time,particle,value,pre,tag\n";
    char buf[128];
    for (std::size_t e = 0; e < path.times.size(); ++e) {
        if (!path.particles.stored(e)) continue;
        for (int cohort = 0; cohort < 2; ++cohort) {
            const CohortPath& cp = cohort == 0 ? path.particles : path.copies;
            const auto x = cp.at(e);
            std::vector<const char*> tag(cp.n, path.on_base_grid[e] ? "grid" : "event");
            std::vector<double> pre(x.begin(), x.end());
            const auto js = cp.jumps_at(e);
            for (auto it = js.rbegin(); it != js.rend(); ++it) {
                pre[it->id] = it->pre;
                tag[it->id] = it->kind == JumpKind::common ? "common" : "idio";
            }
            for (std::size_t i = 0; i < cp.n; ++i) {
                std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%.17g,%s\n", path.times[e], i + cohort * cp.n, x[i],
                              pre[i], tag[i]);
                os << buf;
            }
        }
    }
}

}  // namespace mfito

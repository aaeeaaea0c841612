#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mfito/errors.hpp"
#include "mfito/field.hpp"
#include "mfito/functional.hpp"
#include "mfito/model.hpp"
#include "mfito/quadrature.hpp"
#include "mfito/simulate.hpp"
#include "mfito/summation.hpp"

namespace mfito {

struct ItoOptions {
    /// Evaluate idiosyncratic jump differences at m_{s-} instead of
    /// integrating over the segment from m_{s-} to m_s.
    bool left_limit_idio = false;
    /// Record derivative suprema on base-grid steps.
    bool boundedness = true;
};

struct ItoTermBreakdown {
    double t = 0.0;
    double lhs = 0.0;
    double jump_sum = 0.0;              // sum over J(m) of U_{s-}(m_s) - U_{s-}(m_{s-})
    double idio_jump_term = 0.0;        // cohort average of idiosyncratic jump differences
    double drift_term = 0.0;            // b d_x + (sigma^2 + sigma0^2)/2 d_xx, left points
    double diffusion_term = 0.0;        // d_x delta u * sigma0 dW0
    double common_integral_term = 0.0;  // cohort estimate of E0[int d_x delta u sigma dW]
    double covariation_term = 0.0;      // particle-copy pairs, factorized
    double residual = 0.0;

    double idio_jump_bias = 0.0;           // interpolated minus left-limit evaluation
    double common_jump_first_order = 0.0;  // sum over J(m) of E0[Delta^X delta u(m_{s-}, X_s)]
    std::size_t common_jumps = 0;
    std::size_t idio_jumps = 0;
    BoundednessLedger ledger;

    double rhs() const {
        return jump_sum + idio_jump_term + drift_term + diffusion_term + common_integral_term + covariation_term;
    }
};

namespace detail {

inline void require_full_path(const ScenarioPath& path) {
    require(path.particles.values.size() == path.times.size() * path.n(),
            "verification needs a path simulated with store_paths enabled");
}

inline bool has_common_jump(std::span<const JumpRecord> js) {
    return std::any_of(js.begin(), js.end(), [](const JumpRecord& j) { return j.kind == JumpKind::common; });
}

/// Every Ito-formula term for a time-indexed field up to grid index e_end.
inline ItoTermBreakdown ito_terms(const FieldTable& f, const ScenarioPath& path, std::size_t e_end,
                                  const ItoOptions& opt) {
    require_full_path(path);
    const ModelSpec& spec = *path.spec;
    const std::size_t n = path.n();
    const GaussLegendre gl(f.flat_nodes());
    const bool idio_diffusion = !spec.sigma.is_zero();
    const bool common_diffusion = !spec.sigma0.is_zero();

    ItoTermBreakdown out;
    out.t = path.times[e_end];
    std::vector<double> drift_steps, diff_steps, noise_steps, cov_steps, jump_steps, idio_steps, left_steps, first_steps;
    std::vector<double> drift_i(n), diff_i(n), noise_i(n), w(n), wh(n);

    for (std::size_t e = 0; e < e_end; ++e) {
        const double t = path.times[e];
        const double h = path.times[e + 1] - t;
        const auto x = path.particles.at(e);
        const auto xc = path.copies.at(e);
        const MeasureView m = MeasureView::of(x);
        const FieldJets J = FieldJets::at(f, f.at[e], x);
        const std::vector<double> next_pre = path.particles.left_limit(e + 1);
        const double dw0 = path.dW0[e];
        for (std::size_t i = 0; i < n; ++i) {
            const double bi = spec.b(t, m, x[i]);
            const double si = spec.sigma(t, m, x[i]);
            const double s0 = spec.sigma0(t, m, x[i]);
            const double dx = J.dx_flat(x[i]);
            const double dxx = J.dxx_flat(x[i]);
            drift_i[i] = (bi * dx + 0.5 * (si * si + s0 * s0) * dxx) * h;
            diff_i[i] = dx * s0 * dw0;
            noise_i[i] = idio_diffusion ? dx * (next_pre[i] - x[i] - bi * h - s0 * dw0) : 0.0;
            w[i] = s0;
            wh[i] = spec.sigma0(t, m, xc[i]);
            if (opt.boundedness && path.on_base_grid[e])
                out.ledger.record(J.value(), J.flat(x[i]), dx, dxx, J.dxdxhat_flat2(x[i], x[i]), x[i]);
        }
        drift_steps.push_back(pairwise_mean(drift_i));
        diff_steps.push_back(pairwise_mean(diff_i));
        noise_steps.push_back(pairwise_mean(noise_i));
        if (common_diffusion) cov_steps.push_back(0.5 * J.pair_mean_dxdxhat(x, w, xc, wh) * h);

        // Jumps at t_{e+1}, evaluated with the left-limit field U_{s-}.
        const std::size_t s = e + 1;
        const auto js = path.particles.jumps_at(s);
        if (js.empty()) continue;
        const auto post = path.particles.at(s);
        const auto y_pre = FieldJets::features(f, next_pre);
        const auto y_post = FieldJets::features(f, post);
        const auto& coef = f.before[s];
        const FieldJets before(f, coef, y_pre);
        std::vector<double> first(js.size());
        for (std::size_t k = 0; k < js.size(); ++k) first[k] = before.flat(js[k].post) - before.flat(js[k].pre);
        if (has_common_jump(js)) {
            const FieldJets after(f, coef, y_post);
            jump_steps.push_back(after.value() - before.value());
            first_steps.push_back(pairwise_sum(first) / static_cast<double>(n));
            ++out.common_jumps;
            continue;
        }
        out.idio_jumps += js.size();
        const double left = pairwise_sum(first) / static_cast<double>(n);
        std::vector<double> nodes(static_cast<std::size_t>(gl.size()));
        for (int q = 0; q < gl.size(); ++q) {
            const FieldJets mid(f, coef, interpolate_features(y_pre, y_post, gl.nodes[q]));
            std::vector<double> d(js.size());
            for (std::size_t k = 0; k < js.size(); ++k) d[k] = mid.flat(js[k].post) - mid.flat(js[k].pre);
            nodes[q] = gl.weights[q] * pairwise_sum(d);
        }
        const double interp = pairwise_sum(nodes) / static_cast<double>(n);
        left_steps.push_back(left);
        idio_steps.push_back(opt.left_limit_idio ? left : interp);
    }

    out.drift_term = pairwise_sum(drift_steps);
    out.diffusion_term = pairwise_sum(diff_steps);
    out.common_integral_term = pairwise_sum(noise_steps);
    out.covariation_term = pairwise_sum(cov_steps);
    out.jump_sum = pairwise_sum(jump_steps);
    out.idio_jump_term = pairwise_sum(idio_steps);
    out.idio_jump_bias = out.idio_jump_term - pairwise_sum(left_steps);
    if (opt.left_limit_idio) out.idio_jump_bias = 0.0;
    out.common_jump_first_order = pairwise_sum(first_steps);
    out.lhs = FieldJets::at(f, f.at[e_end], path.particles.at(e_end)).value() -
              FieldJets::at(f, f.at[0], path.particles.at(0)).value();
    out.residual = out.lhs - out.rhs();
    return out;
}

inline std::size_t grid_index(const ScenarioPath& path, double t) {
    if (!(t > 0.0) || t > path.times.back() + 1e-12)
        throw PreconditionError("verification time must lie in (0, T]");
    return path.index_at(t);
}

}  // namespace detail

/// Both sides of the Ito formula for u along the particle flow, up to the
/// last effective-grid time not after t.
inline ItoTermBreakdown verify_ito(const CylindricalFunctional& u, const ScenarioPath& path, double t,
                                   const ItoOptions& opt = {}) {
    const std::size_t e_end = detail::grid_index(path, t);
    return detail::ito_terms(FieldTable::constant(u, path.times.size()), path, e_end, opt);
}

/// A partition given as increasing indices into the effective grid.
struct Partition {
    std::string label;
    std::vector<std::size_t> points;

    double mesh(const ScenarioPath& path) const {
        double m = 0.0;
        for (std::size_t k = 1; k < points.size(); ++k) m = std::max(m, path.times[points[k]] - path.times[points[k - 1]]);
        return m;
    }
};

/// Dyadic coarsenings of the base grid (strides 2^levels, ..., 2, 1), then the
/// full effective grid including every event time.
inline std::vector<Partition> dyadic_partitions(const ScenarioPath& path, int levels) {
    std::vector<std::size_t> base;
    for (std::size_t e = 0; e < path.times.size(); ++e)
        if (path.on_base_grid[e]) base.push_back(e);
    std::vector<Partition> out;
    for (int l = levels; l >= 0; --l) {
        const std::size_t stride = std::size_t{1} << l;
        Partition p{"dyadic" + std::to_string(l), {}};
        for (std::size_t k = 0; k < base.size(); k += stride) p.points.push_back(base[k]);
        if (p.points.back() != base.back()) p.points.push_back(base.back());
        out.push_back(std::move(p));
    }
    Partition ev{"events", {}};
    for (std::size_t e = 0; e < path.times.size(); ++e) ev.points.push_back(e);
    out.push_back(std::move(ev));
    return out;
}

struct PartitionReport {
    std::string label;
    std::size_t points = 0;
    double mesh = 0.0;
    double lhs = 0.0;
    double telescoping_check = 0.0;  // |sum of quadrature increments - (u(m_T) - u(m_0))|
    double S_sum = 0.0;              // Ito-expansion estimate of sum S_n
    double S_exact_sum = 0.0;        // exact cohort average of sum S_n
    double T_diff_sum = 0.0;         // 4-fold quadrature with particle-copy pairs
    double T_diff_exact = 0.0;       // same with particle-particle pairs (exact identity)
    double decomposition_gap = 0.0;  // |S_exact_sum + T_diff_exact - lhs|
    double S_limit_gap = 0.0;        // |S_sum - limit from the event-grid terms|
    double T_limit_gap = 0.0;        // |T_diff_sum - limit from the event-grid terms|
};

/// Proof decomposition of u(m_T) - u(m_0) over a partition of the effective grid.
inline PartitionReport partition_decomposition(const CylindricalFunctional& u, const ScenarioPath& path,
                                               const Partition& pi, const ItoTermBreakdown* limits = nullptr) {
    detail::require_full_path(path);
    detail::require(pi.points.size() >= 2 && pi.points.front() == 0, "partition must start at time zero");
    for (std::size_t k = 1; k < pi.points.size(); ++k)
        detail::require(pi.points[k] > pi.points[k - 1] && pi.points[k] < path.times.size(),
                        "partition indices must increase inside the grid");
    const std::size_t n = path.n();
    const GaussLegendre flat_gl(u.is_polynomial() ? u.flat_identity_nodes() : 16);
    const int tdeg = std::max(u.outer_degree() - 1, u.inner_degree() - 1);
    const GaussLegendre t_gl(u.is_polynomial() ? GaussLegendre::nodes_for_degree(std::max(tdeg, 0)) : 8);
    const std::size_t k = u.arity();

    PartitionReport r;
    r.label = pi.label;
    r.points = pi.points.size();
    r.mesh = pi.mesh(path);
    std::vector<double> incr, s_ito, s_exact, t_copy, t_exact;
    std::vector<double> buf(n);

    for (std::size_t p = 1; p < pi.points.size(); ++p) {
        const std::size_t a = pi.points[p - 1];
        const std::size_t b = pi.points[p];
        const auto xa = path.particles.at(a);
        const auto xb = path.particles.at(b);
        const auto ca = path.copies.at(a);
        const auto cb = path.copies.at(b);
        const auto ya = u.features(xa);
        const auto yb = u.features(xb);
        const Jet Ja = u.jet(ya);

        // Flat-identity increment with the natural particle coupling.
        std::vector<double> nodes(static_cast<std::size_t>(flat_gl.size()));
        for (int q = 0; q < flat_gl.size(); ++q) {
            std::vector<double> y(k);
            for (std::size_t j = 0; j < k; ++j) y[j] = (1.0 - flat_gl.nodes[q]) * ya[j] + flat_gl.nodes[q] * yb[j];
            const Jet J = u.jet(std::move(y));
            for (std::size_t i = 0; i < n; ++i) buf[i] = u.flat(J, xb[i]) - u.flat(J, xa[i]);
            nodes[q] = flat_gl.weights[q] * pairwise_mean(buf);
        }
        incr.push_back(pairwise_sum(nodes));

        for (std::size_t i = 0; i < n; ++i) buf[i] = u.flat(Ja, xb[i]) - u.flat(Ja, xa[i]);
        s_exact.push_back(pairwise_mean(buf));

        // Ito expansion on the effective sub-steps with the measure frozen at m_a.
        std::vector<double> sub;
        for (std::size_t e = a; e < b; ++e) {
            const auto x = path.particles.at(e);
            const auto pre = path.particles.left_limit(e + 1);
            for (std::size_t i = 0; i < n; ++i) {
                const double d = pre[i] - x[i];
                buf[i] = u.dx_flat(Ja, x[i]) * d + 0.5 * u.dxx_flat(Ja, x[i]) * d * d;
            }
            for (const auto& j : path.particles.jumps_at(e + 1)) buf[j.id] += u.flat(Ja, j.post) - u.flat(Ja, j.pre);
            sub.push_back(pairwise_mean(buf));
        }
        s_ito.push_back(pairwise_sum(sub));

        // int_{[0,1]^4} lambda1 E E^[f(m^{l1 l2}, X^{l4}, Xh^{l3}) dX dXh] with the Hessian factorized.
        auto moments = [&](std::span<const double> from, std::span<const double> to) {
            std::vector<std::vector<double>> out(static_cast<std::size_t>(t_gl.size()), std::vector<double>(k));
            std::vector<double> col(n);
            std::vector<double> phi1(k);
            for (int q = 0; q < t_gl.size(); ++q) {
                std::vector<std::vector<double>> per(k, std::vector<double>(n));
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = to[i] - from[i];
                    u.basis(from[i] + t_gl.nodes[q] * d, 1, phi1);
                    for (std::size_t j = 0; j < k; ++j) per[j][i] = phi1[j] * d;
                }
                for (std::size_t j = 0; j < k; ++j) out[q][j] = pairwise_mean(per[j]);
            }
            return out;
        };
        const auto A = moments(xa, xb);
        const auto B = moments(ca, cb);
        std::vector<double> Abar(k, 0.0), Bbar(k, 0.0);
        for (int q = 0; q < t_gl.size(); ++q)
            for (std::size_t j = 0; j < k; ++j) {
                Abar[j] += t_gl.weights[q] * A[q][j];
                Bbar[j] += t_gl.weights[q] * B[q][j];
            }
        double tc = 0.0;
        double te = 0.0;
        for (int q1 = 0; q1 < t_gl.size(); ++q1)
            for (int q2 = 0; q2 < t_gl.size(); ++q2) {
                const double mu = t_gl.nodes[q1] * t_gl.nodes[q2];
                std::vector<double> y(k);
                for (std::size_t j = 0; j < k; ++j) y[j] = (1.0 - mu) * ya[j] + mu * yb[j];
                const Jet J = u.jet(std::move(y));
                const double wgt = t_gl.weights[q1] * t_gl.weights[q2] * t_gl.nodes[q1];
                for (std::size_t j = 0; j < k; ++j)
                    for (std::size_t l = 0; l < k; ++l) {
                        tc += wgt * J.hess[j * k + l] * Abar[j] * Bbar[l];
                        te += wgt * J.hess[j * k + l] * Abar[j] * Abar[l];
                    }
            }
        t_copy.push_back(tc);
        t_exact.push_back(te);
    }

    const auto x0 = path.particles.at(pi.points.front());
    const auto xT = path.particles.at(pi.points.back());
    r.lhs = u.at(xT).value - u.at(x0).value;
    r.telescoping_check = std::abs(pairwise_sum(incr) - r.lhs);
    r.S_sum = pairwise_sum(s_ito);
    r.S_exact_sum = pairwise_sum(s_exact);
    r.T_diff_sum = pairwise_sum(t_copy);
    r.T_diff_exact = pairwise_sum(t_exact);
    r.decomposition_gap = std::abs(r.S_exact_sum + r.T_diff_exact - r.lhs);
    if (limits) {
        // Limits of the proof: S collects every first-order jump difference at
        // m_{s-}; T collects the covariation and the flow-jump corrections.
        const double left_idio = limits->idio_jump_term - limits->idio_jump_bias;
        const double s_lim = limits->drift_term + limits->diffusion_term + limits->common_integral_term + left_idio +
                             limits->common_jump_first_order;
        const double t_lim = limits->covariation_term + limits->jump_sum - limits->common_jump_first_order;
        r.S_limit_gap = std::abs(r.S_sum - s_lim);
        r.T_limit_gap = std::abs(r.T_diff_sum - t_lim);
    }
    return r;
}

struct BracketRow {
    std::string label;
    std::size_t points = 0;
    double mesh = 0.0;
    double sum = 0.0;     // cohort mean of sum_n H (dX)^2
    double sum_se = 0.0;  // standard error across particles
    double limit = 0.0;   // int H_{s-} d[X]_s on the event grid
    double gap = 0.0;
    double pair_sum = 0.0;    // particle-copy mean of sum_n H dX dXh
    double pair_limit = 0.0;  // int H sigma0 sigma0^ ds + common-jump products
    double pair_gap = 0.0;
};

using ProcessFunctional = std::function<double(double, const MeasureView&, double)>;

/// Partition sums of H (dX)^2 against their bracket limit, per partition.
inline std::vector<BracketRow> bracket_convergence_check(const ProcessFunctional& H, double H_bound,
                                                         const ScenarioPath& path,
                                                         const std::vector<Partition>& grids) {
    detail::require_full_path(path);
    const ModelSpec& spec = *path.spec;
    const std::size_t n = path.n();
    auto Hc = [&](double t, const MeasureView& m, double x) {
        const double v = H(t, m, x);
        if (!(std::abs(v) <= H_bound))
            throw BoundViolation("H exceeds its declared bound at " + ModelSpec::where(t, m, x));
        return v;
    };

    // Limits on the event grid.
    std::vector<double> lim_steps, pair_steps, hv(n), sv(n), s0p(n), s0c(n);
    for (std::size_t e = 0; e < path.steps(); ++e) {
        const double t = path.times[e];
        const double h = path.times[e + 1] - t;
        const auto x = path.particles.at(e);
        const auto xc = path.copies.at(e);
        const MeasureView m = MeasureView::of(x);
        for (std::size_t i = 0; i < n; ++i) {
            hv[i] = Hc(t, m, x[i]);
            const double si = spec.sigma(t, m, x[i]);
            s0p[i] = spec.sigma0(t, m, x[i]);
            s0c[i] = spec.sigma0(t, m, xc[i]);
            sv[i] = hv[i] * (si * si + s0p[i] * s0p[i]) * h;
            s0p[i] *= hv[i];
        }
        lim_steps.push_back(pairwise_mean(sv));
        pair_steps.push_back(pairwise_mean(s0p) * pairwise_mean(s0c) * h);

        const std::size_t s = e + 1;
        const auto js = path.particles.jumps_at(s);
        if (js.empty()) continue;
        const auto pre = path.particles.left_limit(s);
        const MeasureView mm = MeasureView::of(pre);
        std::vector<double> jp(n, 0.0);
        for (const auto& j : js) {
            const double d = j.post - j.pre;
            jp[j.id] += Hc(path.times[s], mm, j.pre) * d * d;
        }
        lim_steps.push_back(pairwise_mean(jp));
        if (detail::has_common_jump(js)) {
            std::vector<double> a(n, 0.0), c(n, 0.0);
            for (const auto& j : js)
                if (j.kind == JumpKind::common) a[j.id] = Hc(path.times[s], mm, j.pre) * (j.post - j.pre);
            for (const auto& j : path.copies.jumps_at(s))
                if (j.kind == JumpKind::common) c[j.id] = j.post - j.pre;
            pair_steps.push_back(pairwise_mean(a) * pairwise_mean(c));
        }
    }
    const double limit = pairwise_sum(lim_steps);
    const double pair_limit = pairwise_sum(pair_steps);

    std::vector<BracketRow> rows;
    for (const auto& pi : grids) {
        BracketRow row;
        row.label = pi.label;
        row.points = pi.points.size();
        row.mesh = pi.mesh(path);
        std::vector<std::vector<double>> per(n);
        std::vector<double> pair_terms;
        std::vector<double> a(n), c(n);
        for (std::size_t p = 1; p < pi.points.size(); ++p) {
            const std::size_t lo = pi.points[p - 1];
            const std::size_t hi = pi.points[p];
            const auto xa = path.particles.at(lo);
            const auto xb = path.particles.at(hi);
            const auto ca = path.copies.at(lo);
            const auto cb = path.copies.at(hi);
            const MeasureView m = MeasureView::of(xa);
            for (std::size_t i = 0; i < n; ++i) {
                const double hval = Hc(path.times[lo], m, xa[i]);
                const double d = xb[i] - xa[i];
                per[i].push_back(hval * d * d);
                a[i] = hval * d;
                c[i] = cb[i] - ca[i];
            }
            pair_terms.push_back(pairwise_mean(a) * pairwise_mean(c));
        }
        std::vector<double> totals(n);
        for (std::size_t i = 0; i < n; ++i) totals[i] = pairwise_sum(per[i]);
        const auto st = sample_stats(totals);
        row.sum = st.mean;
        row.sum_se = st.standard_error();
        row.limit = limit;
        row.gap = std::abs(row.sum - limit);
        row.pair_sum = pairwise_sum(pair_terms);
        row.pair_limit = pair_limit;
        row.pair_gap = std::abs(row.pair_sum - pair_limit);
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Number of effective-grid times at which a particle and a copy both make
/// an idiosyncratic jump.
inline std::size_t jump_pairing_check(const ScenarioPath& path) {
    std::size_t count = 0;
    for (std::size_t e = 1; e < path.times.size(); ++e) {
        const auto a = path.particles.jumps_at(e);
        const auto b = path.copies.jumps_at(e);
        const bool pa = std::any_of(a.begin(), a.end(), [](const JumpRecord& j) { return j.kind == JumpKind::idiosyncratic; });
        const bool pb = std::any_of(b.begin(), b.end(), [](const JumpRecord& j) { return j.kind == JumpKind::idiosyncratic; });
        if (pa && pb) ++count;
    }
    return count;
}

}  // namespace mfito

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mfito/errors.hpp"
#include "mfito/field.hpp"
#include "mfito/functional.hpp"
#include "mfito/ito.hpp"
#include "mfito/polynomial.hpp"
#include "mfito/simulate.hpp"
#include "mfito/summation.hpp"

namespace mfito {

/// Piecewise polynomial in absolute time. Piece k covers
/// [breaks[k-1], breaks[k]) with breaks[-1] = -inf and breaks[K] = +inf.
struct TimeProfile {
    std::vector<double> breaks;
    std::vector<Polynomial> pieces{Polynomial({1.0})};

    static TimeProfile constant(double c) { return {{}, {Polynomial({c})}}; }

    void validate() const {
        detail::require(pieces.size() == breaks.size() + 1, "time profile needs one more piece than breakpoints");
        detail::require(std::is_sorted(breaks.begin(), breaks.end()), "time profile breakpoints must increase");
    }

    std::size_t piece_of(double t) const {
        return static_cast<std::size_t>(std::upper_bound(breaks.begin(), breaks.end(), t) - breaks.begin());
    }

    double operator()(double t) const { return pieces[piece_of(t)](t); }

    /// Exact integral over [a, b].
    double integral(double a, double b) const {
        double s = 0.0;
        double lo = a;
        for (std::size_t k = piece_of(a); lo < b; ++k) {
            const double hi = k < breaks.size() ? std::min(b, breaks[k]) : b;
            const Polynomial F = pieces[k].antiderivative();
            s += F(hi) - F(lo);
            lo = hi;
        }
        return s;
    }
};

struct FieldTerm {
    CylindricalFunctional functional;
    TimeProfile profile;
};

enum class FvDriver { none, time, common_counter };
enum class MartingaleDriver { none, common_brownian, compensated_counter };

/// U_t(m) = U_0(m) + int phi_s(m) dA_s + int psi_s(m) dN_s with
/// phi_s = sum_r f_r(s) Phi_r and psi_s = sum_r g_r(s) Psi_r.
struct RandomFieldSpec {
    CylindricalFunctional U0;
    std::vector<FieldTerm> phi;
    std::vector<FieldTerm> psi;
    FvDriver A = FvDriver::none;
    MartingaleDriver N = MartingaleDriver::none;
};

/// Driver increments realized on a scenario's effective grid, per field term.
struct RealizedField {
    FieldTable table;                           // parts: U0, phi..., psi...
    std::vector<std::vector<double>> cont;      // [e][part]: integral over [t_e, t_{e+1}) of the profile against D^c
    std::vector<std::vector<double>> jump;      // [e][part]: profile(t_e) * jump of the driver at t_e
    std::vector<char> driver_jump;              // 1 if a counter driver jumps at t_e
    std::size_t phi_begin = 1;
    std::size_t psi_begin = 1;
    double a_total_variation = 0.0;
    double n_bracket = 0.0;
    bool bounded_drivers = true;  // false for counter drivers: a.s. finite, not bounded
};

namespace detail {

inline bool counter_jumps_at(const ScenarioPath& path, const CommonEvent& ev) {
    const ModelSpec& spec = *path.spec;
    return ev.theta * spec.Lambda0() <= *spec.lambda0.constant;
}

inline RealizedField realize(const RandomFieldSpec& U, const ScenarioPath& path) {
    const ModelSpec& spec = *path.spec;
    if (!U.phi.empty() && U.A == FvDriver::none) throw PreconditionError("phi terms need a realized driver A");
    if (!U.psi.empty() && U.N == MartingaleDriver::none) throw PreconditionError("psi terms need a realized driver N");
    const bool counter = U.A == FvDriver::common_counter || U.N == MartingaleDriver::compensated_counter;
    if (counter && !spec.lambda0.constant)
        throw PreconditionError("counter driver is not common-measurable: lambda0 depends on the state");
    if (U.N == MartingaleDriver::common_brownian && path.dW0.size() != path.steps())
        throw PreconditionError("common Brownian driver is not realized on this path");
    for (const auto& t : U.phi) t.profile.validate();
    for (const auto& t : U.psi) t.profile.validate();

    RealizedField rf;
    const std::size_t points = path.times.size();
    const std::size_t parts = 1 + U.phi.size() + U.psi.size();
    rf.phi_begin = 1;
    rf.psi_begin = 1 + U.phi.size();
    rf.table.parts.push_back(&U.U0);
    for (const auto& t : U.phi) rf.table.parts.push_back(&t.functional);
    for (const auto& t : U.psi) rf.table.parts.push_back(&t.functional);
    rf.cont.assign(points, std::vector<double>(parts, 0.0));
    rf.jump.assign(points, std::vector<double>(parts, 0.0));
    rf.driver_jump.assign(points, 0);
    rf.bounded_drivers = !counter;
    if (counter)
        for (const auto& ev : path.common)
            if (counter_jumps_at(path, ev)) rf.driver_jump[ev.step] = 1;

    const double lambda0 = counter ? *spec.lambda0.constant : 0.0;
    for (std::size_t e = 0; e < points; ++e) {
        const double t = path.times[e];
        const bool last = e + 1 == points;
        const double t1 = last ? t : path.times[e + 1];
        for (std::size_t r = 0; r < U.phi.size(); ++r) {
            const auto& p = U.phi[r].profile;
            if (U.A == FvDriver::time && !last) rf.cont[e][rf.phi_begin + r] = p.integral(t, t1);
            if (U.A == FvDriver::common_counter && rf.driver_jump[e]) rf.jump[e][rf.phi_begin + r] = p(t);
        }
        for (std::size_t r = 0; r < U.psi.size(); ++r) {
            const auto& p = U.psi[r].profile;
            if (U.N == MartingaleDriver::common_brownian && !last) rf.cont[e][rf.psi_begin + r] = p(t) * path.dW0[e];
            if (U.N == MartingaleDriver::compensated_counter) {
                if (!last) rf.cont[e][rf.psi_begin + r] = -lambda0 * p.integral(t, t1);
                if (rf.driver_jump[e]) rf.jump[e][rf.psi_begin + r] = p(t);
            }
        }
    }

    // Coefficients: U0 weight one, driver integrals accumulated left to right.
    rf.table.at.assign(points, std::vector<double>(parts, 0.0));
    rf.table.before.assign(points, std::vector<double>(parts, 0.0));
    std::vector<double> acc(parts, 0.0);
    acc[0] = 1.0;
    for (std::size_t e = 0; e < points; ++e) {
        if (e > 0)
            for (std::size_t r = 1; r < parts; ++r) acc[r] += rf.cont[e - 1][r];
        rf.table.before[e] = acc;
        for (std::size_t r = 1; r < parts; ++r) acc[r] += rf.jump[e][r];
        rf.table.at[e] = acc;
    }

    const double T = path.times.back();
    std::size_t jumps = 0;
    for (char j : rf.driver_jump) jumps += j ? 1 : 0;
    if (U.A == FvDriver::time) rf.a_total_variation = T;
    if (U.A == FvDriver::common_counter) rf.a_total_variation = static_cast<double>(jumps);
    if (U.N == MartingaleDriver::common_brownian) rf.n_bracket = T;
    if (U.N == MartingaleDriver::compensated_counter) rf.n_bracket = static_cast<double>(jumps);
    return rf;
}

inline std::vector<double> driver_only(std::vector<double> c) {
    c[0] = 0.0;
    return c;
}

}  // namespace detail

/// U_t(m) or one of its derivatives, with the driver integrals frozen at t and
/// m substituted afterwards. Off-grid t is allowed only for continuous
/// finite-variation drivers.
inline double field_eval(const RandomFieldSpec& U, const ScenarioPath& path, double t, const EmpiricalMeasure& m,
                         const DerivativeQuery& q) {
    if (!(t >= 0.0) || t > path.times.back() + 1e-12) throw PreconditionError("field time outside the horizon");
    const RealizedField rf = detail::realize(U, path);
    const std::size_t e = path.index_at(t);
    std::vector<double> coef = rf.table.at[e];
    const double t0 = path.times[e];
    if (std::abs(t - t0) > 1e-12) {
        if (!U.psi.empty() && U.N == MartingaleDriver::common_brownian)
            throw PreconditionError("common Brownian driver is realized only on the effective grid");
        for (std::size_t r = 0; r < U.phi.size(); ++r)
            if (U.A == FvDriver::time) coef[rf.phi_begin + r] += U.phi[r].profile.integral(t0, t);
        for (std::size_t r = 0; r < U.psi.size(); ++r)
            if (U.N == MartingaleDriver::compensated_counter)
                coef[rf.psi_begin + r] -= *path.spec->lambda0.constant * U.psi[r].profile.integral(t0, t);
    }
    double s = 0.0;
    for (std::size_t r = 0; r < coef.size(); ++r)
        if (coef[r] != 0.0) s += coef[r] * eval(*rf.table.parts[r], m, q);
    return s;
}

struct WentzellBreakdown {
    ItoTermBreakdown ito;         // Ito terms with U_s in place of u
    double driver_A_term = 0.0;   // int phi_s(m_{s-}) dA_s
    double driver_N_term = 0.0;   // int psi_s(m_{s-}) dN_s
    double cross_jump_term = 0.0;     // E0 sum d_x delta phi dX dA, plus the psi jump bracket
    double cross_bracket_term = 0.0;  // E0 int d_x delta psi sigma0 ds for N = W0
    double residual = 0.0;

    double jump_curvature = 0.0;  // dD [Phi(m_s) - Phi(m_{s-}) - E0 d_x delta Phi dX] at driver jumps
    double transport_error = 0.0;
    double a_total_variation = 0.0;
    double n_bracket = 0.0;
    bool bounded_drivers = true;

    double rhs() const {
        return ito.rhs() + driver_A_term + driver_N_term + cross_jump_term + cross_bracket_term;
    }
};

namespace detail {

/// Max gap between derivatives of U_t and path sums of driver-weighted
/// derivatives of the parts, at a fixed measure and points.
inline double transport_error(const RealizedField& rf, std::span<const double> particles, double x, double xh) {
    const auto& f = rf.table;
    const std::size_t parts = f.parts.size();
    const auto y = FieldJets::features(f, particles);
    std::vector<std::vector<double>> d(parts);  // per part: flat, dx, dxx, flat2, dxdxhat
    for (std::size_t r = 0; r < parts; ++r) {
        const auto& u = *f.parts[r];
        const Jet J = u.jet(y[r]);
        d[r] = {u.flat(J, x), u.dx_flat(J, x), u.dxx_flat(J, x), u.flat2(J, x, xh), u.dxdxhat_flat2(J, x, xh)};
    }
    std::vector<double> acc(5, 0.0);
    for (std::size_t k = 0; k < 5; ++k) acc[k] = d[0][k];
    double worst = 0.0;
    for (std::size_t e = 0; e < f.at.size(); ++e) {
        for (std::size_t r = 1; r < parts; ++r) {
            const double inc = (e > 0 ? rf.cont[e - 1][r] : 0.0) + rf.jump[e][r];
            if (inc != 0.0)
                for (std::size_t k = 0; k < 5; ++k) acc[k] += inc * d[r][k];
        }
        const FieldJets J(f, f.at[e], y);
        const double field[5] = {J.flat(x), J.dx_flat(x), J.dxx_flat(x),
                                 0.0, J.dxdxhat_flat2(x, xh)};
        double flat2 = 0.0;
        for (std::size_t r = 0; r < parts; ++r)
            if (f.at[e][r] != 0.0) flat2 += f.at[e][r] * f.parts[r]->flat2(J.jet(r), x, xh);
        for (std::size_t k = 0; k < 5; ++k) {
            const double v = k == 3 ? flat2 : field[k];
            worst = std::max(worst, std::abs(v - acc[k]) / std::max(1.0, std::abs(v)));
        }
    }
    return worst;
}

}  // namespace detail

/// Both sides of the Ito-Wentzell formula for U along the particle flow.
inline WentzellBreakdown verify_wentzell(const RandomFieldSpec& U, const ScenarioPath& path, double t,
                                         const ItoOptions& opt = {}) {
    const std::size_t e_end = detail::grid_index(path, t);
    const RealizedField rf = detail::realize(U, path);
    const ModelSpec& spec = *path.spec;
    const std::size_t n = path.n();
    const auto& f = rf.table;

    WentzellBreakdown out;
    out.ito = detail::ito_terms(f, path, e_end, opt);
    out.a_total_variation = rf.a_total_variation;
    out.n_bracket = rf.n_bracket;
    out.bounded_drivers = rf.bounded_drivers;

    auto part_range = [&](std::size_t begin, std::size_t count) {
        return std::pair<std::size_t, std::size_t>{begin, begin + count};
    };
    const auto phi_r = part_range(rf.phi_begin, U.phi.size());
    const auto psi_r = part_range(rf.psi_begin, U.psi.size());
    auto weighted = [&](const std::vector<double>& w, std::pair<std::size_t, std::size_t> range) {
        std::vector<double> c(f.parts.size(), 0.0);
        for (std::size_t r = range.first; r < range.second; ++r) c[r] = w[r];
        return c;
    };

    std::vector<double> a_steps, n_steps, cross_steps, bracket_steps, curv_steps, buf(n);
    for (std::size_t e = 0; e < e_end; ++e) {
        const double te = path.times[e];
        const double h = path.times[e + 1] - te;
        const auto x = path.particles.at(e);
        const auto y = FieldJets::features(f, x);
        a_steps.push_back(FieldJets(f, weighted(rf.cont[e], phi_r), y).value());
        n_steps.push_back(FieldJets(f, weighted(rf.cont[e], psi_r), y).value());
        if (U.N == MartingaleDriver::common_brownian && !U.psi.empty()) {
            std::vector<double> g(f.parts.size(), 0.0);
            for (std::size_t r = 0; r < U.psi.size(); ++r) g[psi_r.first + r] = U.psi[r].profile(te);
            const FieldJets G(f, g, y);
            const MeasureView m = MeasureView::of(x);
            for (std::size_t i = 0; i < n; ++i) buf[i] = G.dx_flat(x[i]) * spec.sigma0(te, m, x[i]) * h;
            bracket_steps.push_back(pairwise_mean(buf));
        }

        const std::size_t s = e + 1;
        if (!rf.driver_jump[s]) continue;
        const auto pre = path.particles.left_limit(s);
        const auto post = path.particles.at(s);
        const auto y_pre = FieldJets::features(f, pre);
        const auto y_post = FieldJets::features(f, post);
        const auto js = path.particles.jumps_at(s);
        for (const auto& range : {phi_r, psi_r}) {
            const auto w = weighted(rf.jump[s], range);
            const FieldJets before(f, w, y_pre);
            const FieldJets after(f, w, y_post);
            (range == phi_r ? a_steps : n_steps).push_back(before.value());
            std::vector<double> first(js.size());
            for (std::size_t k = 0; k < js.size(); ++k)
                first[k] = js[k].kind == JumpKind::common ? before.dx_flat(js[k].pre) * (js[k].post - js[k].pre) : 0.0;
            const double cross = pairwise_sum(first) / static_cast<double>(n);
            cross_steps.push_back(cross);
            curv_steps.push_back(after.value() - before.value() - cross);
        }
    }

    out.driver_A_term = pairwise_sum(a_steps);
    out.driver_N_term = pairwise_sum(n_steps);
    out.cross_jump_term = pairwise_sum(cross_steps);
    out.cross_bracket_term = pairwise_sum(bracket_steps);
    out.jump_curvature = pairwise_sum(curv_steps);
    out.residual = out.ito.lhs - out.rhs();
    const auto xT = path.particles.at(e_end);
    out.transport_error = detail::transport_error(rf, xT, xT.front(), xT.back());
    return out;
}

struct FieldPartitionRow {
    std::string label;
    std::size_t points = 0;
    double mesh = 0.0;
    double single_sum = 0.0;
    double single_limit = 0.0;
    double single_gap = 0.0;
    double pair_sum = 0.0;
    double pair_limit = 0.0;
    double pair_gap = 0.0;
};

/// Partition sums of the driver part F = d_xx delta U (single) and
/// F^ = d_x d_xh delta^2 U (particle-copy pairs) against their jump-sum limits,
/// at interpolation weight r for every lambda.
inline std::vector<FieldPartitionRow> field_partition_diagnostic(const RandomFieldSpec& U, const ScenarioPath& path,
                                                                 const std::vector<Partition>& grids,
                                                                 double r = 0.5) {
    detail::require_full_path(path);
    detail::require(r >= 0.0 && r <= 1.0, "interpolation weight must lie in [0,1]");
    const RealizedField rf = detail::realize(U, path);
    const auto& f = rf.table;
    const std::size_t n = path.n();

    // One interval [a, b] of the sum; the same formula gives the jump limit
    // when (a, b) is (s-, s) with the left-limit field and values.
    auto term = [&](const std::vector<double>& ca, const std::vector<double>& cb, std::span<const double> xa,
                    std::span<const double> xb, std::span<const double> ha, std::span<const double> hb,
                    double& single, double& pair) {
        const auto ya = FieldJets::features(f, xa);
        const auto yb = FieldJets::features(f, xb);
        const FieldJets Fa(f, detail::driver_only(ca), ya);
        const FieldJets Fb(f, detail::driver_only(cb), ya);
        const FieldJets Fm(f, detail::driver_only(cb), interpolate_features(ya, yb, r));
        std::vector<double> s(n), d(n), dh(n), xl(n), hl(n);
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = xb[i] - xa[i];
            dh[i] = hb[i] - ha[i];
            xl[i] = xa[i] + r * d[i];
            hl[i] = ha[i] + r * dh[i];
            s[i] = (Fb.dxx_flat(xl[i]) - Fa.dxx_flat(xa[i])) * d[i] * d[i];
        }
        single = pairwise_mean(s);
        pair = Fm.pair_mean_dxdxhat(xl, d, hl, dh) - Fa.pair_mean_dxdxhat(xa, d, ha, dh);
    };

    std::vector<double> lim_s, lim_p;
    for (std::size_t s = 1; s < path.times.size(); ++s) {
        if (path.particles.jumps_at(s).empty() && path.copies.jumps_at(s).empty()) continue;
        double a = 0.0;
        double b = 0.0;
        term(f.before[s], f.at[s], path.particles.left_limit(s), path.particles.at(s), path.copies.left_limit(s),
             path.copies.at(s), a, b);
        lim_s.push_back(a);
        lim_p.push_back(b);
    }
    const double single_limit = pairwise_sum(lim_s);
    const double pair_limit = pairwise_sum(lim_p);

    std::vector<FieldPartitionRow> rows;
    for (const auto& pi : grids) {
        FieldPartitionRow row;
        row.label = pi.label;
        row.points = pi.points.size();
        row.mesh = pi.mesh(path);
        std::vector<double> ss, pp;
        for (std::size_t k = 1; k < pi.points.size(); ++k) {
            const std::size_t a = pi.points[k - 1];
            const std::size_t b = pi.points[k];
            double x = 0.0;
            double y = 0.0;
            term(f.at[a], f.at[b], path.particles.at(a), path.particles.at(b), path.copies.at(a), path.copies.at(b),
                 x, y);
            ss.push_back(x);
            pp.push_back(y);
        }
        row.single_sum = pairwise_sum(ss);
        row.single_limit = single_limit;
        row.single_gap = std::abs(row.single_sum - single_limit);
        row.pair_sum = pairwise_sum(pp);
        row.pair_limit = pair_limit;
        row.pair_gap = std::abs(row.pair_sum - pair_limit);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace mfito

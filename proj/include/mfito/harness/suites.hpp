#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "mfito/control.hpp"
#include "mfito/functional.hpp"
#include "mfito/generators.hpp"
#include "mfito/harness/config.hpp"
#include "mfito/harness/report.hpp"
#include "mfito/ito.hpp"
#include "mfito/measure.hpp"
#include "mfito/oracles.hpp"
#include "mfito/simulate.hpp"
#include "mfito/stopping.hpp"
#include "mfito/wentzell.hpp"

namespace mfito::harness {

/// Collects metric rows for one (level, seed) task.
class Emitter {
public:
    Emitter(const ExperimentConfig& c, std::size_t level, std::uint64_t seed)
        : suite_(c.suite), level_(level), seed_(seed), N_(c.ladder[level].N), step_(c.ladder[level].step) {}

    void operator()(const std::string& metric, double value) {
        rows_.push_back({suite_, level_, seed_, N_, step_, metric, value});
    }
    std::vector<Row> take() { return std::move(rows_); }

private:
    std::string suite_;
    std::size_t level_;
    std::uint64_t seed_;
    std::size_t N_;
    double step_;
    std::vector<Row> rows_;
};

namespace detail {

inline ScenarioPath simulate_level(const ExperimentConfig& c, std::size_t level, std::uint64_t seed) {
    return simulate(std::make_shared<const ModelSpec>(*c.model), c.ladder[level].N, c.ladder[level].step, seed);
}

inline double horizon_of(const ScenarioPath& path) { return path.times.back(); }

/// Mean drift of the cohort when every rate and size is constant, else NaN.
inline double constant_mean_rate(const ModelSpec& s) {
    const bool constant = s.b.constant && s.gamma.constant && s.lambda.constant && s.gamma0.constant && s.lambda0.constant;
    if (!constant) return std::numeric_limits<double>::quiet_NaN();
    auto mean_of = [](const DiscreteLaw& d) {
        double m = 0.0;
        for (std::size_t i = 0; i < d.values.size(); ++i) m += d.values[i] * d.probs[i];
        return m;
    };
    return *s.b.constant + *s.lambda.constant * *s.gamma.constant * mean_of(s.nu) +
           *s.lambda0.constant * *s.gamma0.constant * mean_of(s.nu0);
}

inline void telescoping_rows(Emitter& emit, const CylindricalFunctional& u, const ScenarioPath& path, int levels,
                             const ItoTermBreakdown* limits) {
    double tele = 0.0, decomp = 0.0;
    PartitionReport events;
    for (const auto& pi : dyadic_partitions(path, levels)) {
        const auto r = partition_decomposition(u, path, pi, limits);
        tele = std::max(tele, r.telescoping_check);
        decomp = std::max(decomp, r.decomposition_gap);
        events = r;
    }
    emit("telescoping", tele);
    emit("decomposition_gap", decomp);
    if (limits) {
        emit("events_S_limit_gap", events.S_limit_gap);
        emit("events_T_limit_gap", events.T_limit_gap);
    }
}

inline void run_functional_oracle(const ExperimentConfig& c, std::uint64_t seed, Emitter& emit) {
    Stream s(CounterRng(seed), Purpose::generator, 0);
    const int k = 1 + static_cast<int>(s.index(2));
    const int outer = 1 + static_cast<int>(s.index(static_cast<std::size_t>(c.max_degree)));
    // Total degree in the atom locations is outer * inner <= max_degree.
    const int inner = 1 + static_cast<int>(s.index(static_cast<std::size_t>(c.max_degree / outer)));
    const auto u = random_functional(s, k, outer, inner);
    const auto m0 = random_measure(s, 1 + s.index(c.max_atoms), c.interval_lo, c.interval_hi, false);
    const auto m1 = random_measure(s, 1 + s.index(c.max_atoms), c.interval_lo, c.interval_hi, false);
    emit("outer_degree", outer);
    emit("inner_degree", inner);
    emit("flat_identity", check_flat_identity(u, m0, m1, u.flat_identity_nodes()));
    emit("u_scale", std::max(std::abs(u.value(m0)), std::abs(u.value(m1))));
}

inline void run_transport_oracle(const ExperimentConfig& c, std::uint64_t seed, Emitter& emit) {
    Stream s(CounterRng(seed), Purpose::generator, 1);
    const std::size_t n = 1 + s.index(std::min<std::size_t>(c.max_atoms, 6));
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = s.uniform(c.interval_lo, c.interval_hi);
    for (auto& v : b) v = s.uniform(c.interval_lo, c.interval_hi);
    const auto ma = EmpiricalMeasure::uniform(a);
    const auto mb = EmpiricalMeasure::uniform(b);
    emit("atoms", static_cast<double>(n));
    emit("w2_assignment_gap", std::abs(wasserstein(ma, mb, 2) - oracle::assignment_wasserstein(a, b, 2)));
    emit("w1_assignment_gap", std::abs(wasserstein(ma, mb, 1) - oracle::assignment_wasserstein(a, b, 1)));

    // Unequal weights and sizes against a general min-cost flow.
    const auto p = random_measure(s, 1 + s.index(6), c.interval_lo, c.interval_hi, false);
    const auto q = random_measure(s, 1 + s.index(6), c.interval_lo, c.interval_hi, false);
    std::vector<double> sp, dq, cost;
    for (const auto& x : p.atoms()) sp.push_back(x.weight);
    for (const auto& y : q.atoms()) dq.push_back(y.weight);
    for (const auto& x : p.atoms())
        for (const auto& y : q.atoms()) cost.push_back((x.location - y.location) * (x.location - y.location));
    const double w2 = wasserstein(p, q, 2);
    emit("w2sq_flow_gap", std::abs(w2 * w2 - min_cost_transport(sp, dq, cost)));
}

inline void run_ito(const ExperimentConfig& c, std::size_t level, std::uint64_t seed, Emitter& emit) {
    const auto path = simulate_level(c, level, seed);
    const auto& u = *c.functional;
    ItoOptions opt;
    opt.left_limit_idio = c.left_limit_idio;
    const double T = horizon_of(path);
    const auto b = verify_ito(u, path, T, opt);
    emit("lhs", b.lhs);
    emit("drift_term", b.drift_term);
    emit("diffusion_term", b.diffusion_term);
    emit("idio_jump_term", b.idio_jump_term);
    emit("common_integral_term", b.common_integral_term);
    emit("covariation_term", b.covariation_term);
    emit("jump_sum", b.jump_sum);
    emit("idio_jump_bias", b.idio_jump_bias);
    emit("residual", b.residual);
    emit("u_T", u.at(path.particles.at(path.times.size() - 1)).value);
    emit("ledger_finite", b.ledger.finite() ? 1.0 : 0.0);
    emit("idio_jumps", static_cast<double>(b.idio_jumps));
    emit("common_jumps", static_cast<double>(b.common_jumps));
    const double rate = constant_mean_rate(*c.model);
    if (!std::isnan(rate)) {
        const double x0 = pairwise_mean(path.particles.at(0));
        const double xT = pairwise_mean(path.particles.at(path.times.size() - 1));
        emit("moment_error", xT - x0 - rate * T);
    }
    telescoping_rows(emit, u, path, c.dyadic_levels, &b);
}

/// Sum over accepted common events of profile(t) * (Phi(m_t) - Phi(m_t-)) for
/// every term driven by a counter.
inline double hand_counted_cross(const RandomFieldSpec& U, const ScenarioPath& path) {
    std::vector<const FieldTerm*> driven;
    if (U.A == FvDriver::common_counter)
        for (const auto& t : U.phi) driven.push_back(&t);
    if (U.N == MartingaleDriver::compensated_counter)
        for (const auto& t : U.psi) driven.push_back(&t);
    std::vector<double> terms;
    for (const auto& ev : accepted_common_jumps(path)) {
        const auto after = path.particles.at(ev.step);
        const auto before = path.particles.left_limit(ev.step);
        for (const auto* t : driven)
            terms.push_back(t->profile(ev.time) * (t->functional.at(after).value - t->functional.at(before).value));
    }
    return pairwise_sum(terms);
}

inline void run_wentzell(const ExperimentConfig& c, std::size_t level, std::uint64_t seed, Emitter& emit) {
    const auto path = simulate_level(c, level, seed);
    const auto& U = *c.field;
    const double T = horizon_of(path);
    const auto w = verify_wentzell(U, path, T);
    emit("lhs", w.ito.lhs);
    emit("residual", w.residual);
    emit("driver_A_term", w.driver_A_term);
    emit("driver_N_term", w.driver_N_term);
    emit("cross_jump_term", w.cross_jump_term);
    emit("cross_bracket_term", w.cross_bracket_term);
    emit("jump_curvature", w.jump_curvature);
    emit("transport_error", w.transport_error);
    emit("a_total_variation", w.a_total_variation);
    emit("n_bracket", w.n_bracket);
    emit("U_T", field_eval(U, path, T, EmpiricalMeasure::uniform(path.particles.at(path.times.size() - 1)),
                           {DerivativeKind::value, {}}));

    RandomFieldSpec frozen{U.U0, {}, {}, FvDriver::none, MartingaleDriver::none};
    const auto d = verify_wentzell(frozen, path, T);
    const auto r = verify_ito(U.U0, path, T);
    const double eq = std::max({std::abs(d.ito.lhs - r.lhs), std::abs(d.ito.drift_term - r.drift_term),
                                std::abs(d.ito.diffusion_term - r.diffusion_term),
                                std::abs(d.ito.idio_jump_term - r.idio_jump_term),
                                std::abs(d.ito.common_integral_term - r.common_integral_term),
                                std::abs(d.ito.covariation_term - r.covariation_term),
                                std::abs(d.ito.jump_sum - r.jump_sum), std::abs(d.residual - r.residual),
                                std::abs(d.driver_A_term), std::abs(d.driver_N_term), std::abs(d.cross_jump_term),
                                std::abs(d.cross_bracket_term)});
    emit("ito_equivalence", eq);
    if (U.A == FvDriver::common_counter || U.N == MartingaleDriver::compensated_counter) {
        const double hand = hand_counted_cross(U, path);
        emit("cross_jump_hand", hand);
        emit("cross_jump_hand_gap", w.cross_jump_term + w.jump_curvature - hand);
        emit("cross_jump_first_order_gap", w.cross_jump_term - hand);
    }
    telescoping_rows(emit, U.U0, path, c.dyadic_levels, nullptr);
}

inline void run_lemma_bracket(const ExperimentConfig& c, std::size_t level, std::uint64_t seed, Emitter& emit) {
    const auto path = simulate_level(c, level, seed);
    const auto grids = dyadic_partitions(path, c.dyadic_levels);
    const auto rows = bracket_convergence_check(c.H.fn, c.H.bound, path, grids);
    const auto& coarse = rows.front();
    const auto& fine = rows[rows.size() - 2];
    const auto& events = rows.back();
    emit("limit", fine.limit);
    emit("coarse_gap", coarse.gap);
    emit("finest_signed_gap", fine.sum - fine.limit);
    emit("finest_se", fine.sum_se);
    emit("finest_pair_gap", fine.pair_gap);
    emit("events_gap", events.gap);
    emit("events_pair_gap", events.pair_gap);
    emit("pairing_collisions", static_cast<double>(jump_pairing_check(path)));
    if (c.functional) telescoping_rows(emit, *c.functional, path, c.dyadic_levels, nullptr);
}

inline void run_lemma_field(const ExperimentConfig& c, std::size_t level, std::uint64_t seed, Emitter& emit) {
    const auto path = simulate_level(c, level, seed);
    const auto rows = field_partition_diagnostic(*c.field, path, dyadic_partitions(path, c.dyadic_levels));
    const auto& coarse = rows.front();
    const auto& fine = rows[rows.size() - 2];
    const auto& events = rows.back();
    emit("single_limit", events.single_limit);
    emit("pair_limit", events.pair_limit);
    emit("coarse_single_gap", coarse.single_gap);
    emit("finest_single_gap", fine.single_gap);
    emit("finest_pair_gap", fine.pair_gap);
    emit("events_single_gap", events.single_gap);
    emit("events_pair_gap", events.pair_gap);
    telescoping_rows(emit, c.field->U0, path, c.dyadic_levels, nullptr);
}

inline double lattice_spacing(const ExperimentConfig& c, double h) {
    return c.spacing ? *c.spacing : c.spacing_over_h * h;
}

/// Configurations of slice k whose shifts by up to `margin` cells stay inside it.
inline std::vector<LatticeConfig> interior(const ValueTable& t, std::size_t k, long margin) {
    std::vector<LatticeConfig> out;
    const auto idx = t.index(k);
    const long lo = t.slices[k].lo;
    const long hi = lo + static_cast<long>(t.slices[k].points) - 1;
    for (std::uint64_t r = 0; r < idx.size(); ++r) {
        auto cfg = t.unrank(k, r, idx);
        if (t.cell(cfg.front()) - margin >= lo && t.cell(cfg.back()) + margin <= hi) out.push_back(std::move(cfg));
    }
    return out;
}

inline double total_states(const ValueTable& t) {
    double n = 0.0;
    for (const auto& s : t.slices) n += static_cast<double>(s.value.size());
    return n;
}

inline void run_mfc(const ExperimentConfig& c, std::size_t level, std::size_t jobs, Emitter& emit) {
    ControlProblemSpec s = *c.control;
    s.h = c.ladder[level].step;
    s.particles = c.ladder[level].N;
    s.spacing = lattice_spacing(c, s.h);
    s.x0 = static_cast<double>(c.origin_cells) * s.spacing;
    s.jobs = jobs;
    const auto t = solve_mfc_dp(s);
    emit("states", total_states(t));
    emit("rounding_error", t.rounding_error);

    double value_error = 0.0, mismatch = 0.0;
    for (std::size_t k = 0; k <= t.steps; ++k) {
        const auto idx = t.index(k);
        for (std::uint64_t r = 0; r < idx.size(); ++r) {
            const auto cfg = t.unrank(k, r, idx);
            if (c.oracle.kind == "mean_plus_rate") {
                const double expect = pairwise_mean(t.locations(cfg)) + c.oracle.rate * (s.horizon - t.time(k));
                value_error = std::max(value_error, std::abs(t.slices[k].value[r] - expect));
            }
            if (c.oracle.decision && k < t.steps && t.slices[k].decision[r] != *c.oracle.decision) mismatch += 1.0;
        }
    }
    if (c.oracle.kind != "none") emit("value_error", value_error);
    if (c.oracle.decision) emit("decision_mismatch", mismatch);

    long margin = 1;
    bool jumps = false;
    for (const auto& a : s.actions) {
        if (a.lambda > 0.0) jumps = true;
        margin = std::max(margin, 1 + static_cast<long>(std::ceil(std::abs(a.gamma) * s.nu0.max_abs() / s.spacing - 1e-9)));
    }
    double hjb = 0.0, next = 0.0, horizon = 0.0, first_jump = 0.0, checked = 0.0;
    for (std::size_t k = 0; k < t.steps; ++k)
        for (const auto& cfg : interior(t, k, margin)) {
            hjb = std::max(hjb, std::abs(hjb_residual(t, s, k, cfg)));
            next = std::max(next, dpp_check(t, s, k, cfg, StopRule::next_step));
            horizon = std::max(horizon, dpp_check(t, s, k, cfg, StopRule::horizon));
            if (jumps) first_jump = std::max(first_jump, dpp_check(t, s, k, cfg, StopRule::first_common_jump));
            checked += 1.0;
        }
    emit("interior_states", checked);
    emit("hjb_max", hjb);
    emit("dpp_next_step", next);
    emit("dpp_horizon", horizon);
    if (jumps) emit("dpp_first_common_jump", first_jump);
}

inline void run_stopping(const ExperimentConfig& c, std::size_t level, std::size_t jobs, Emitter& emit) {
    StoppingProblemSpec s = *c.stopping;
    s.h = c.ladder[level].step;
    s.particles = c.ladder[level].N;
    s.spacing = lattice_spacing(c, s.h);
    s.x0 = static_cast<double>(c.origin_cells) * s.spacing;
    s.jobs = jobs;
    const auto t = solve_stopping_dp(s);
    emit("states", total_states(t));
    emit("rounding_error", t.rounding_error);
    const double N = static_cast<double>(s.particles);

    double value_error = 0.0, mismatch = 0.0, violations = 0.0, pairs = 0.0, worst_mono = 0.0;
    for (std::size_t k = 0; k <= t.steps; ++k) {
        const auto idx = t.index(k);
        for (std::uint64_t r = 0; r < idx.size(); ++r) {
            const auto cfg = t.unrank(k, r, idx);
            const auto alive = mfito::detail::alive_positions(t, cfg);
            double expect = pairwise_mean(t.locations(cfg));
            std::int32_t decision = static_cast<std::int32_t>((std::size_t{1} << alive.size()) - 1);
            if (c.oracle.kind == "run_alive") {
                expect += c.oracle.rate * (s.horizon - t.time(k)) * static_cast<double>(alive.size()) / N;
                if (k < t.steps) decision = 0;
            }
            if (c.oracle.kind != "none") {
                value_error = std::max(value_error, std::abs(t.slices[k].value[r] - expect));
                if (t.slices[k].decision[r] != decision) mismatch += 1.0;
            }
        }
        const auto mono = monotonicity_violations(t, k);
        violations += static_cast<double>(mono.violations);
        pairs += static_cast<double>(mono.pairs);
        worst_mono = std::max(worst_mono, mono.worst);
    }
    if (c.oracle.kind != "none") {
        emit("value_error", value_error);
        emit("decision_mismatch", mismatch);
    }
    emit("monotone_pairs", pairs);
    emit("monotonicity_violations", violations);
    emit("monotonicity_worst", worst_mono);

    double di = std::numeric_limits<double>::infinity(), neg_lv = di, opt = di, gap = 0.0, stopped = 0.0, tol = 0.0;
    double checked = 0.0;
    for (std::size_t k = 0; k < t.steps; ++k)
        for (const auto& cfg : interior(t, k, 1)) {
            const auto rep = obstacle_residual(t, s, k, cfg, c.tol_c1, c.tol_c2);
            tol = rep.tolerance;
            di = std::min(di, rep.min_DI + rep.tolerance);
            neg_lv = std::min(neg_lv, rep.min_neg_LV + rep.tolerance);
            opt = std::min(opt, rep.tolerance - rep.LV_at_optimum);
            gap = std::max(gap, rep.value_gap);
            stopped = std::max(stopped, std::abs(rep.stopped_pair_term));
            checked += 1.0;
        }
    emit("interior_states", checked);
    emit("tolerance", tol);
    emit("DI_margin", di);
    emit("neg_LV_margin", neg_lv);
    emit("optimum_LV_margin", opt);
    emit("value_gap", gap);
    emit("stopped_pair_term", stopped);
}

}  // namespace detail

/// Rows of one (level, seed) task. `jobs` is used inside the DP suites only.
inline std::vector<Row> run_task(const ExperimentConfig& c, std::size_t level, std::uint64_t seed, std::size_t jobs) {
    Emitter emit(c, level, seed);
    if (c.suite == "functional_oracle") detail::run_functional_oracle(c, seed, emit);
    else if (c.suite == "transport_oracle") detail::run_transport_oracle(c, seed, emit);
    else if (c.suite == "ito") detail::run_ito(c, level, seed, emit);
    else if (c.suite == "wentzell") detail::run_wentzell(c, level, seed, emit);
    else if (c.suite == "lemma_bracket") detail::run_lemma_bracket(c, level, seed, emit);
    else if (c.suite == "lemma_field") detail::run_lemma_field(c, level, seed, emit);
    else if (c.suite == "mfc") detail::run_mfc(c, level, jobs, emit);
    else if (c.suite == "stopping") detail::run_stopping(c, level, jobs, emit);
    else throw PreconditionError("unknown suite '" + c.suite + "'");
    return emit.take();
}

}  // namespace mfito::harness

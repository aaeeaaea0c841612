#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mfito/harness/config.hpp"
#include "mfito/lattice.hpp"
#include "mfito/summation.hpp"

namespace mfito::harness {

/// One raw CSV row: a named metric for one (level, seed) task.
struct Row {
    std::string suite;
    std::size_t level = 0;
    std::uint64_t seed = 0;
    std::size_t N = 0;
    double step = 0.0;
    std::string metric;
    double value = 0.0;
};

inline constexpr const char* kCsvHeader = "suite,level,seed,N,step,metric,value";

inline void write_csv(std::ostream& os, const std::vector<Row>& rows) {
    os << kCsvHeader << '\n';
    for (const auto& r : rows)
        os << r.suite << ',' << r.level << ',' << r.seed << ',' << r.N << ',' << mfito::detail::fmt17(r.step) << ','
           << r.metric << ',' << mfito::detail::fmt17(r.value) << '\n';
}

inline std::vector<Row> read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kCsvHeader) throw Error("report CSV header is missing");
    std::vector<Row> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f[7];
        for (auto& s : f) std::getline(ss, s, ',');
        rows.push_back({f[0], std::stoul(f[1]), std::stoull(f[2]), std::stoul(f[3]), std::stod(f[4]), f[5],
                        std::stod(f[6])});
    }
    return rows;
}

struct GateResult {
    GateSpec spec;
    double statistic = 0.0;
    double bound = 0.0;  // threshold after tolerance scaling
    std::size_t samples = 0;
    bool pass = false;
    std::string note;
};

namespace detail {

inline double rms(const std::vector<double>& v) {
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = v[i] * v[i];
    return std::sqrt(pairwise_mean(sq));
}

inline std::vector<double> values(const std::vector<Row>& rows, const std::string& metric, std::size_t level,
                                  bool any_level) {
    std::vector<double> out;
    for (const auto& r : rows)
        if (r.metric == metric && (any_level || r.level == level)) out.push_back(r.value);
    return out;
}

}  // namespace detail

/// Gate rules, applied to the raw rows only:
///   max_abs       max |v| over the selected level(s) <= threshold * tol_scale
///   max           max v <= threshold * tol_scale
///   min           min v >= threshold
///   rms_ratio     RMS(first level) / RMS(last level) >= threshold
///   rms_relative  RMS(v) / RMS(scale_metric) at the level <= threshold * tol_scale
///   mean_zero     |mean v| <= threshold * tol_scale * SE + floor at the level
///   order         least-squares slope of log max|v| against log step >= threshold,
///                 or every max|v| <= floor
///   max_over_step max |v| / step <= threshold * tol_scale
inline GateResult evaluate_gate(const GateSpec& g, const std::vector<Row>& rows, double tol_scale) {
    GateResult out;
    out.spec = g;
    std::size_t first = std::numeric_limits<std::size_t>::max(), last = 0;
    for (const auto& r : rows)
        if (r.metric == g.metric) {
            first = std::min(first, r.level);
            last = std::max(last, r.level);
        }
    if (first == std::numeric_limits<std::size_t>::max()) {
        out.note = "metric absent";
        out.statistic = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const bool all = g.level == "all";
    const std::size_t level = g.level == "first" ? first : last;
    const auto v = detail::values(rows, g.metric, level, all);
    out.samples = v.size();
    if (g.kind == "max_abs" || g.kind == "max") {
        // NaN counts as +inf so a broken row cannot pass.
        double m = -std::numeric_limits<double>::infinity();
        for (double x : v)
            m = std::isnan(x) ? std::numeric_limits<double>::infinity() : std::max(m, g.kind == "max" ? x : std::abs(x));
        out.statistic = m;
        out.bound = g.threshold * tol_scale;
        out.pass = m <= out.bound;
    } else if (g.kind == "min") {
        double m = std::numeric_limits<double>::infinity();
        for (double x : v) m = std::isnan(x) ? -std::numeric_limits<double>::infinity() : std::min(m, x);
        out.statistic = m;
        out.bound = g.threshold;
        out.pass = m >= out.bound;
    } else if (g.kind == "rms_ratio") {
        const double a = detail::rms(detail::values(rows, g.metric, first, false));
        const double b = detail::rms(detail::values(rows, g.metric, last, false));
        out.statistic = a / b;
        out.bound = g.threshold;
        out.pass = first != last && out.statistic >= out.bound;
        if (first == last) out.note = "needs two levels";
    } else if (g.kind == "rms_relative") {
        const auto s = detail::values(rows, g.scale_metric, level, all);
        out.statistic = detail::rms(v) / detail::rms(s);
        out.bound = g.threshold * tol_scale;
        out.pass = out.statistic <= out.bound;
    } else if (g.kind == "mean_zero") {
        const auto st = sample_stats(v);
        out.statistic = std::abs(st.mean);
        out.bound = g.threshold * tol_scale * st.standard_error() + g.floor;
        out.pass = out.statistic <= out.bound;
    } else if (g.kind == "order") {
        std::map<std::size_t, std::pair<double, double>> per;  // level -> (step, max |v|)
        for (const auto& r : rows)
            if (r.metric == g.metric) {
                auto& p = per[r.level];
                p.first = r.step;
                p.second = std::max(p.second, std::abs(r.value));
            }
        bool floored = true;
        for (const auto& [l, p] : per) floored = floored && p.second <= g.floor;
        out.bound = g.threshold;
        if (floored) {
            out.statistic = std::numeric_limits<double>::infinity();
            out.pass = true;
            out.note = "every level at or below the exact-zero floor";
        } else {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            const double n = static_cast<double>(per.size());
            for (const auto& [l, p] : per) {
                const double x = std::log(p.first);
                const double y = std::log(std::max(p.second, std::numeric_limits<double>::min()));
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
            }
            out.statistic = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            out.pass = per.size() >= 2 && out.statistic >= out.bound;
            if (per.size() < 2) out.note = "needs two levels";
        }
    } else if (g.kind == "max_over_step") {
        double m = 0.0;
        for (const auto& r : rows)
            if (r.metric == g.metric && (all || r.level == level)) m = std::max(m, std::abs(r.value) / r.step);
        out.statistic = m;
        out.bound = g.threshold * tol_scale;
        out.pass = m <= out.bound;
    }
    return out;
}

inline std::vector<GateResult> evaluate_gates(const std::vector<GateSpec>& gates, const std::vector<Row>& rows,
                                              double tol_scale) {
    std::vector<GateResult> out;
    for (const auto& g : gates) out.push_back(evaluate_gate(g, rows, tol_scale));
    return out;
}

}  // namespace mfito::harness

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mfito/errors.hpp"
#include "mfito/measure.hpp"

namespace mfito {

/// Colex ranking of size-n multisets over {0, ..., symbols-1}. A sorted
/// multiset c_0 <= ... <= c_{n-1} maps to the strictly increasing d_i = c_i + i
/// and rank = sum_i C(d_i, i + 1).
class MultisetIndex {
public:
    MultisetIndex(std::size_t symbols, std::size_t n) : symbols_(symbols), n_(n) {
        detail::require(symbols >= 1 && n >= 1, "multiset index needs symbols and a positive size");
        const std::size_t top = symbols + n;
        binom_.assign(top + 1, std::vector<std::uint64_t>(n + 2, 0));
        for (std::size_t a = 0; a <= top; ++a) {
            binom_[a][0] = 1;
            for (std::size_t b = 1; b <= std::min(a, n + 1); ++b) {
                const std::uint64_t v = binom_[a - 1][b - 1] + (b <= a - 1 ? binom_[a - 1][b] : 0);
                binom_[a][b] = v < binom_[a - 1][b - 1] ? kSaturated : std::min(v, kSaturated);
            }
        }
        size_ = binom_[symbols + n - 1][n];
    }

    /// Number of multisets; saturates at 2^63 when it would overflow.
    std::uint64_t size() const { return size_; }
    std::size_t symbols() const { return symbols_; }

    std::uint64_t rank(std::span<const std::size_t> sorted) const {
        std::uint64_t r = 0;
        for (std::size_t i = 0; i < n_; ++i) r += binom_[sorted[i] + i][i + 1];
        return r;
    }

    void unrank(std::uint64_t r, std::span<std::size_t> out) const {
        std::size_t hi = symbols_ + n_ - 1;
        for (std::size_t i = n_; i-- > 0;) {
            std::size_t d = hi;
            while (binom_[d][i + 1] > r) --d;
            r -= binom_[d][i + 1];
            out[i] = d - i;
            hi = d;
        }
    }

private:
    static constexpr std::uint64_t kSaturated = std::uint64_t{1} << 63;
    std::size_t symbols_;
    std::size_t n_;
    std::uint64_t size_ = 0;
    std::vector<std::vector<std::uint64_t>> binom_;
};

/// Sorted particle codes: code = cell for plain states, 2 * cell + alive on S.
using LatticeConfig = std::vector<long>;

/// Backward-DP values over exchangeable particle configurations. Slice k holds
/// every configuration on the cells [-k g, L - 1 + k g], g = growth per step,
/// so that one-step moves from slice k stay inside slice k + 1.
struct ValueTable {
    struct Slice {
        long lo = 0;
        std::size_t points = 0;
        std::vector<double> value;
        std::vector<std::int32_t> decision;  // control index or stop bitmask; -1 when none
    };

    std::string kind;
    std::uint64_t config_hash = 0;
    std::size_t particles = 0;
    bool flagged = false;
    double x0 = 0.0;
    double spacing = 1.0;
    double h = 1.0;
    std::size_t steps = 0;
    std::size_t base_points = 0;
    long growth = 0;
    double rounding_error = 0.0;
    std::vector<Slice> slices;

    long code_width() const { return flagged ? 2 : 1; }
    static long cell_of(long code, bool flagged) { return flagged ? floor_div(code, 2) : code; }
    long cell(long code) const { return cell_of(code, flagged); }
    bool alive(long code) const { return flagged && (code - 2 * cell(code)) == 1; }
    double location(long code) const { return x0 + spacing * static_cast<double>(cell(code)); }
    long encode(long cell_index, bool is_alive) const { return flagged ? 2 * cell_index + (is_alive ? 1 : 0) : cell_index; }
    double time(std::size_t k) const { return h * static_cast<double>(k); }

    MultisetIndex index(std::size_t k) const {
        return MultisetIndex(slices[k].points * static_cast<std::size_t>(code_width()), particles);
    }

    bool contains(std::size_t k, const LatticeConfig& c) const {
        const auto& s = slices[k];
        for (long code : c) {
            const long j = cell(code);
            if (j < s.lo || j >= s.lo + static_cast<long>(s.points)) return false;
        }
        return true;
    }

    std::uint64_t rank(std::size_t k, const LatticeConfig& c, const MultisetIndex& idx) const {
        detail::require(c.size() == particles, "configuration has the wrong particle count");
        if (!contains(k, c)) throw PreconditionError("configuration lies outside the lattice slice " + std::to_string(k));
        std::vector<std::size_t> local(c.size());
        const long base = slices[k].lo * code_width();
        for (std::size_t i = 0; i < c.size(); ++i) local[i] = static_cast<std::size_t>(c[i] - base);
        return idx.rank(local);
    }

    LatticeConfig unrank(std::size_t k, std::uint64_t r, const MultisetIndex& idx) const {
        std::vector<std::size_t> local(particles);
        idx.unrank(r, local);
        LatticeConfig c(particles);
        const long base = slices[k].lo * code_width();
        for (std::size_t i = 0; i < particles; ++i) c[i] = static_cast<long>(local[i]) + base;
        return c;
    }

    double value(std::size_t k, const LatticeConfig& c) const {
        detail::require(k < slices.size(), "time index beyond the table");
        return slices[k].value[rank(k, c, index(k))];
    }

    std::int32_t decision(std::size_t k, const LatticeConfig& c) const {
        return slices[k].decision[rank(k, c, index(k))];
    }

    std::vector<double> locations(const LatticeConfig& c) const {
        std::vector<double> xs(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) xs[i] = location(c[i]);
        return xs;
    }

    EmpiricalMeasure measure(const LatticeConfig& c) const {
        const auto xs = locations(c);
        if (!flagged) return EmpiricalMeasure::uniform(xs);
        std::vector<bool> al(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) al[i] = alive(c[i]);
        return EmpiricalMeasure::uniform_flagged(xs, al);
    }

    /// Nearest lattice configuration to the given locations (and flags on S).
    LatticeConfig config(std::span<const double> xs, const std::vector<bool>& al = {}) const {
        detail::require(xs.size() == particles, "configuration has the wrong particle count");
        detail::require(!flagged || al.size() == xs.size(), "flagged configuration needs alive flags");
        LatticeConfig c(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double u = (xs[i] - x0) / spacing;
            const long j = std::lround(u);
            detail::require(std::abs(u - static_cast<double>(j)) <= 1e-9, "location is not a lattice point");
            c[i] = encode(j, flagged && al[i]);
        }
        std::sort(c.begin(), c.end());
        return c;
    }

private:
    static long floor_div(long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Allocates slices and enforces the state budget.
inline void allocate_slices(ValueTable& t, std::size_t budget) {
    std::uint64_t total = 0;
    t.slices.assign(t.steps + 1, {});
    for (std::size_t k = 0; k <= t.steps; ++k) {
        auto& s = t.slices[k];
        s.lo = -static_cast<long>(k) * t.growth;
        s.points = t.base_points + 2 * k * static_cast<std::size_t>(t.growth);
        const std::uint64_t n = t.index(k).size();
        total = total + n < total ? std::numeric_limits<std::uint64_t>::max() : total + n;
    }
    if (total > budget) throw BudgetError("lattice state space exceeds the budget", static_cast<std::size_t>(std::min<std::uint64_t>(total, std::numeric_limits<std::size_t>::max())), budget);
    for (std::size_t k = 0; k <= t.steps; ++k) {
        const auto n = static_cast<std::size_t>(t.index(k).size());
        t.slices[k].value.assign(n, 0.0);
        t.slices[k].decision.assign(n, -1);
    }
}

}  // namespace detail

/// Columnar text export: '#'-prefixed metadata, then one row per state with
/// columns config_hash, time_index, configuration, value, decision.
/// Configurations list locations separated by ';' with ':1' / ':0' flags on S.
inline void write_value_table(std::ostream& os, const ValueTable& t) {
    os << "# mfito value table v1\n";
    os << "# kind=" << t.kind << "\n";
    os << "# particles=" << t.particles << "\n";
    os << "# flagged=" << (t.flagged ? 1 : 0) << "\n";
    os << "# x0=" << detail::fmt17(t.x0) << "\n";
    os << "# spacing=" << detail::fmt17(t.spacing) << "\n";
    os << "# h=" << detail::fmt17(t.h) << "\n";
    os << "# steps=" << t.steps << "\n";
    os << "# base_points=" << t.base_points << "\n";
    os << "# growth=" << t.growth << "\n";
    os << "# rounding_error=" << detail::fmt17(t.rounding_error) << "\n";
    os << "config_hash,time_index,configuration,value,decision\n";
    for (std::size_t k = 0; k < t.slices.size(); ++k) {
        const auto idx = t.index(k);
        for (std::uint64_t r = 0; r < idx.size(); ++r) {
            const auto c = t.unrank(k, r, idx);
            os << t.config_hash << ',' << k << ',';
            for (std::size_t i = 0; i < c.size(); ++i) {
                if (i) os << ';';
                os << detail::fmt17(t.location(c[i]));
                if (t.flagged) os << ':' << (t.alive(c[i]) ? 1 : 0);
            }
            os << ',' << detail::fmt17(t.slices[k].value[r]) << ',' << t.slices[k].decision[r] << '\n';
        }
    }
}

inline ValueTable read_value_table(std::istream& is) {
    ValueTable t;
    std::map<std::string, std::string> meta;
    std::string line;
    while (std::getline(is, line) && line.rfind("# ", 0) == 0) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
    }
    detail::require(line == "config_hash,time_index,configuration,value,decision", "value table header is missing");
    auto need = [&](const char* key) {
        const auto it = meta.find(key);
        detail::require(it != meta.end(), std::string("value table metadata lacks ") + key);
        return it->second;
    };
    t.kind = need("kind");
    t.particles = std::stoul(need("particles"));
    t.flagged = need("flagged") == "1";
    t.x0 = std::stod(need("x0"));
    t.spacing = std::stod(need("spacing"));
    t.h = std::stod(need("h"));
    t.steps = std::stoul(need("steps"));
    t.base_points = std::stoul(need("base_points"));
    t.growth = std::stol(need("growth"));
    t.rounding_error = std::stod(need("rounding_error"));
    detail::allocate_slices(t, std::numeric_limits<std::size_t>::max());
    bool hash_set = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string hash, k, cfg, value, decision;
        std::getline(ss, hash, ',');
        std::getline(ss, k, ',');
        std::getline(ss, cfg, ',');
        std::getline(ss, value, ',');
        std::getline(ss, decision, ',');
        if (!hash_set) {
            t.config_hash = std::stoull(hash);
            hash_set = true;
        }
        std::vector<double> xs;
        std::vector<bool> al;
        std::stringstream cs(cfg);
        std::string item;
        while (std::getline(cs, item, ';')) {
            const auto colon = item.find(':');
            xs.push_back(std::stod(item.substr(0, colon)));
            if (t.flagged) al.push_back(colon != std::string::npos && item.substr(colon + 1) == "1");
        }
        const std::size_t ki = std::stoul(k);
        detail::require(ki < t.slices.size(), "value table row has an out-of-range time index");
        const auto c = t.config(xs, al);
        const auto r = t.rank(ki, c, t.index(ki));
        t.slices[ki].value[r] = std::stod(value);
        t.slices[ki].decision[r] = static_cast<std::int32_t>(std::stol(decision));
    }
    return t;
}

}  // namespace mfito

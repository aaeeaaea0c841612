#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "mfito/functional.hpp"
#include "mfito/quadrature.hpp"

namespace mfito {

/// A time-indexed linear combination U_e = sum_r c_r(e) u_r over the
/// effective grid. `at[e]` are the coefficients of U at t_e and `before[e]`
/// those of the left limit U_{t_e-}. A plain functional is the one-part case
/// with every coefficient equal to one.
struct FieldTable {
    std::vector<const CylindricalFunctional*> parts;
    std::vector<std::vector<double>> at;
    std::vector<std::vector<double>> before;

    static FieldTable constant(const CylindricalFunctional& u, std::size_t points) {
        FieldTable f;
        f.parts = {&u};
        f.at.assign(points, {1.0});
        f.before.assign(points, {1.0});
        return f;
    }

    /// Gauss-Legendre node count exact for lambda-integrands of degree D-1
    /// in every polynomial part; the tanh wrap falls back to 16 nodes.
    int flat_nodes() const {
        int n = 1;
        for (const auto* p : parts) n = std::max(n, p->is_polynomial() ? p->flat_identity_nodes() : 16);
        return n;
    }

    int max_outer_degree() const {
        int d = 0;
        for (const auto* p : parts) d = std::max(d, p->outer_degree());
        return d;
    }

    int max_inner_degree() const {
        int d = 0;
        for (const auto* p : parts) d = std::max(d, p->inner_degree());
        return d;
    }

    bool polynomial() const {
        return std::all_of(parts.begin(), parts.end(), [](const auto* p) { return p->is_polynomial(); });
    }
};

/// Jets of every part of a field at one measure, combined with coefficients.
class FieldJets {
public:
    FieldJets() = default;

    FieldJets(const FieldTable& f, std::span<const double> coef, const std::vector<std::vector<double>>& features)
        : parts_(&f.parts), coef_(coef.begin(), coef.end()) {
        jets_.reserve(f.parts.size());
        for (std::size_t r = 0; r < f.parts.size(); ++r) jets_.push_back(f.parts[r]->jet(features[r]));
    }

    static std::vector<std::vector<double>> features(const FieldTable& f, std::span<const double> particles) {
        std::vector<std::vector<double>> y;
        y.reserve(f.parts.size());
        for (const auto* p : f.parts) y.push_back(p->features(particles));
        return y;
    }

    static FieldJets at(const FieldTable& f, std::span<const double> coef, std::span<const double> particles) {
        return FieldJets(f, coef, features(f, particles));
    }

    double value() const { return combine([&](std::size_t r) { return jets_[r].value; }); }
    double flat(double x) const { return combine([&](std::size_t r) { return part(r).flat(jets_[r], x); }); }
    double dx_flat(double x) const { return combine([&](std::size_t r) { return part(r).dx_flat(jets_[r], x); }); }
    double dxx_flat(double x) const { return combine([&](std::size_t r) { return part(r).dxx_flat(jets_[r], x); }); }
    double dxdxhat_flat2(double x, double xh) const {
        return combine([&](std::size_t r) { return part(r).dxdxhat_flat2(jets_[r], x, xh); });
    }
    double pair_mean_dxdxhat(std::span<const double> xs, std::span<const double> w, std::span<const double> xh,
                             std::span<const double> wh) const {
        return combine([&](std::size_t r) { return part(r).pair_mean_dxdxhat(jets_[r], xs, w, xh, wh); });
    }

    const Jet& jet(std::size_t r) const { return jets_[r]; }
    const CylindricalFunctional& part(std::size_t r) const { return *(*parts_)[r]; }
    std::size_t size() const { return jets_.size(); }

private:
    template <typename F>
    double combine(F&& term) const {
        double s = 0.0;
        for (std::size_t r = 0; r < jets_.size(); ++r)
            if (coef_[r] != 0.0) s += coef_[r] * term(r);
        return s;
    }

    const std::vector<const CylindricalFunctional*>* parts_ = nullptr;
    std::vector<double> coef_;
    std::vector<Jet> jets_;
};

/// Features of (1 - l) y0 + l y1, per part.
inline std::vector<std::vector<double>> interpolate_features(const std::vector<std::vector<double>>& y0,
                                                             const std::vector<std::vector<double>>& y1,
                                                             double l) {
    std::vector<std::vector<double>> y(y0.size());
    for (std::size_t r = 0; r < y0.size(); ++r) {
        y[r].resize(y0[r].size());
        for (std::size_t j = 0; j < y0[r].size(); ++j) y[r][j] = (1.0 - l) * y0[r][j] + l * y1[r][j];
    }
    return y;
}

}  // namespace mfito

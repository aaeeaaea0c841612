#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mfito/errors.hpp"
#include "mfito/measure.hpp"
#include "mfito/polynomial.hpp"
#include "mfito/quadrature.hpp"
#include "mfito/summation.hpp"

namespace mfito {

/// Value, gradient and Hessian of the outer map G at a feature vector y.
struct Jet {
    std::vector<double> y;
    double value = 0.0;
    std::vector<double> grad;
    std::vector<double> hess;  // row-major k x k
};

/// u(m) = G(<phi_1,m>, ..., <phi_k,m>) with G = F or G = tanh(F), F polynomial.
class CylindricalFunctional {
public:
    enum class Wrap { none, tanh };

    CylindricalFunctional() : CylindricalFunctional(MultiPolynomial(1, {}), {Polynomial({0.0})}) {}

    CylindricalFunctional(MultiPolynomial outer, std::vector<Polynomial> inner, Wrap wrap = Wrap::none)
        : outer_(std::move(outer)), wrap_(wrap) {
        detail::require(outer_.variables() == inner.size(),
                        "outer polynomial arity must equal the number of inner polynomials");
        detail::require(!inner.empty(), "cylindrical functional needs at least one inner polynomial");
        for (auto& p : inner) {
            Polynomial d1 = p.derivative();
            Polynomial d2 = d1.derivative();
            phi_.push_back(std::move(p));
            dphi_.push_back(std::move(d1));
            ddphi_.push_back(std::move(d2));
        }
    }

    /// u(m) = <phi, m>.
    static CylindricalFunctional linear(Polynomial phi) {
        return CylindricalFunctional(MultiPolynomial(1, {{1.0, {1}}}), {std::move(phi)});
    }

    /// u(m) = <phi, m>^2.
    static CylindricalFunctional squared(Polynomial phi) {
        return CylindricalFunctional(MultiPolynomial(1, {{1.0, {2}}}), {std::move(phi)});
    }

    std::size_t arity() const { return phi_.size(); }
    Wrap wrap() const { return wrap_; }
    const MultiPolynomial& outer() const { return outer_; }
    std::span<const Polynomial> inner() const { return phi_; }

    int outer_degree() const { return outer_.total_degree(); }
    int inner_degree() const {
        int d = 0;
        for (const auto& p : phi_) d = std::max(d, p.degree());
        return d;
    }
    bool is_polynomial() const { return wrap_ == Wrap::none; }

    /// Exact Gauss-Legendre node count for the lambda-integrand of the
    /// flat-derivative identity. Features are affine in lambda, so the
    /// integrand has degree D-1. Returns 0 when no finite rule is exact.
    int flat_identity_nodes() const {
        if (!is_polynomial()) return 0;
        return GaussLegendre::nodes_for_degree(std::max(outer_degree() - 1, 0));
    }

    std::vector<double> features(const EmpiricalMeasure& m) const {
        detail::require(m.space() == Space::real, "cylindrical functionals act on measures on R");
        std::vector<double> y(arity());
        for (std::size_t j = 0; j < arity(); ++j)
            y[j] = m.integrate([&](const Atom& a) { return phi_[j](a.location); });
        return y;
    }

    /// Features of the uniform empirical measure over xs.
    std::vector<double> features(std::span<const double> xs) const {
        detail::require(!xs.empty(), "features need at least one particle");
        std::vector<double> y(arity());
        std::vector<double> buf(xs.size());
        for (std::size_t j = 0; j < arity(); ++j) {
            for (std::size_t i = 0; i < xs.size(); ++i) buf[i] = phi_[j](xs[i]);
            y[j] = pairwise_mean(buf);
        }
        return y;
    }

    Jet jet(std::vector<double> y) const {
        Jet J;
        outer_.jet(y, J.value, J.grad, J.hess);
        if (wrap_ == Wrap::tanh) {
            const std::size_t k = arity();
            const double th = std::tanh(J.value);
            const double s = 1.0 - th * th;
            for (std::size_t j = 0; j < k; ++j)
                for (std::size_t l = 0; l < k; ++l)
                    J.hess[j * k + l] = s * J.hess[j * k + l] - 2.0 * th * s * J.grad[j] * J.grad[l];
            for (auto& g : J.grad) g *= s;
            J.value = th;
        }
        J.y = std::move(y);
        return J;
    }

    Jet at(const EmpiricalMeasure& m) const { return jet(features(m)); }
    Jet at(std::span<const double> particles) const { return jet(features(particles)); }

    double value(const EmpiricalMeasure& m) const { return at(m).value; }

    /// Sum_j c_j phi_j^{(order)}(x) for a coefficient vector c.
    double contract(std::span<const double> c, double x, int order) const {
        const auto& table = order == 0 ? phi_ : (order == 1 ? dphi_ : ddphi_);
        double s = 0.0;
        for (std::size_t j = 0; j < arity(); ++j)
            if (c[j] != 0.0) s += c[j] * table[j](x);
        return s;
    }

    /// Sum_{jl} H_jl phi_j^{(a)}(x) phi_l^{(b)}(xh), summed in a form that is
    /// bitwise symmetric under swapping (x, a) with (xh, b).
    double contract2(const Jet& J, double x, int a, double xh, int b) const {
        const std::size_t k = arity();
        std::vector<double> left(k);
        std::vector<double> right(k);
        basis(x, a, left);
        basis(xh, b, right);
        double s1 = 0.0;
        double s2 = 0.0;
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t l = 0; l < k; ++l) {
                s1 += J.hess[j * k + l] * (left[j] * right[l]);
                s2 += J.hess[j * k + l] * (right[j] * left[l]);
            }
        return 0.5 * (s1 + s2);
    }

    void basis(double x, int order, std::span<double> out) const {
        const auto& table = order == 0 ? phi_ : (order == 1 ? dphi_ : ddphi_);
        for (std::size_t j = 0; j < arity(); ++j) out[j] = table[j](x);
    }

    double flat(const Jet& J, double x) const { return contract(J.grad, x, 0); }
    double dx_flat(const Jet& J, double x) const { return contract(J.grad, x, 1); }
    double dxx_flat(const Jet& J, double x) const { return contract(J.grad, x, 2); }
    double flat2(const Jet& J, double x, double xh) const { return contract2(J, x, 0, xh, 0); }
    double dxdxhat_flat2(const Jet& J, double x, double xh) const { return contract2(J, x, 1, xh, 1); }

    /// Weighted feature average (1/n) Sum_i w_i phi_j^{(order)}(x_i), per j.
    std::vector<double> weighted_basis_mean(std::span<const double> xs, std::span<const double> w,
                                            int order) const {
        detail::require(w.empty() || w.size() == xs.size(), "weight vector has the wrong length");
        std::vector<double> out(arity());
        std::vector<double> buf(xs.size());
        const auto& table = order == 0 ? phi_ : (order == 1 ? dphi_ : ddphi_);
        for (std::size_t j = 0; j < arity(); ++j) {
            for (std::size_t i = 0; i < xs.size(); ++i) buf[i] = table[j](xs[i]) * (w.empty() ? 1.0 : w[i]);
            out[j] = pairwise_mean(buf);
        }
        return out;
    }

    /// Average over all (i, j) pairs of w_i wh_j d_x d_xh delta^2 u(m, x_i, xh_j),
    /// factorized through the Hessian so the cost is linear in the cohort sizes.
    double pair_mean_dxdxhat(const Jet& J, std::span<const double> xs, std::span<const double> w,
                             std::span<const double> xh, std::span<const double> wh) const {
        const std::size_t k = arity();
        const auto a = weighted_basis_mean(xs, w, 1);
        const auto b = weighted_basis_mean(xh, wh, 1);
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t l = 0; l < k; ++l) s += J.hess[j * k + l] * a[j] * b[l];
        return s;
    }

private:
    MultiPolynomial outer_;
    std::vector<Polynomial> phi_;
    std::vector<Polynomial> dphi_;
    std::vector<Polynomial> ddphi_;
    Wrap wrap_ = Wrap::none;
};

enum class DerivativeKind { value, flat, flat2, dx_flat, dxx_flat, dxdxhat_flat2 };

inline std::size_t point_arity(DerivativeKind k) {
    switch (k) {
        case DerivativeKind::value: return 0;
        case DerivativeKind::flat:
        case DerivativeKind::dx_flat:
        case DerivativeKind::dxx_flat: return 1;
        case DerivativeKind::flat2:
        case DerivativeKind::dxdxhat_flat2: return 2;
    }
    return 0;
}

struct DerivativeQuery {
    DerivativeKind which = DerivativeKind::value;
    std::vector<double> points;  // x, or (x, xhat)
};

inline double eval(const CylindricalFunctional& u, const Jet& J, const DerivativeQuery& q) {
    if (q.points.size() != point_arity(q.which))
        throw PreconditionError("derivative query expects " + std::to_string(point_arity(q.which)) +
                                " point argument(s), got " + std::to_string(q.points.size()));
    const auto& p = q.points;
    switch (q.which) {
        case DerivativeKind::value: return J.value;
        case DerivativeKind::flat: return u.flat(J, p[0]);
        case DerivativeKind::dx_flat: return u.dx_flat(J, p[0]);
        case DerivativeKind::dxx_flat: return u.dxx_flat(J, p[0]);
        case DerivativeKind::flat2: return u.flat2(J, p[0], p[1]);
        case DerivativeKind::dxdxhat_flat2: return u.dxdxhat_flat2(J, p[0], p[1]);
    }
    return 0.0;
}

inline double eval(const CylindricalFunctional& u, const EmpiricalMeasure& m, const DerivativeQuery& q) {
    if (q.points.size() != point_arity(q.which))
        throw PreconditionError("derivative query expects " + std::to_string(point_arity(q.which)) +
                                " point argument(s), got " + std::to_string(q.points.size()));
    return eval(u, u.at(m), q);
}

/// |u(m0) - u(m1) - int_0^1 E[delta u(mu_l, xi0) - delta u(mu_l, xi1)] dl|
/// with (xi0, xi1) drawn from the quantile coupling and mu_l = (1-l) m0 + l m1.
inline double check_flat_identity(const CylindricalFunctional& u, const EmpiricalMeasure& m0,
                                  const EmpiricalMeasure& m1, int quad_nodes) {
    detail::require(quad_nodes >= 1, "quadrature needs at least one node");
    if (u.is_polynomial())
        detail::require(quad_nodes >= u.flat_identity_nodes(),
                        "too few quadrature nodes for exactness: need " +
                            std::to_string(u.flat_identity_nodes()));
    const double lhs = u.value(m0) - u.value(m1);
    const auto y0 = u.features(m0);
    const auto y1 = u.features(m1);
    const auto cells = quantile_coupling(m0, m1);
    const GaussLegendre gl(quad_nodes);
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(quad_nodes) * cells.size());
    for (int q = 0; q < gl.size(); ++q) {
        const double lam = gl.nodes[q];
        std::vector<double> y(u.arity());
        for (std::size_t j = 0; j < y.size(); ++j) y[j] = (1.0 - lam) * y0[j] + lam * y1[j];
        const Jet J = u.jet(std::move(y));
        for (const auto& c : cells)
            terms.push_back(gl.weights[q] * c.mass * (u.flat(J, c.from) - u.flat(J, c.to)));
    }
    return std::abs(lhs - pairwise_sum(terms));
}

struct DerivativeConsistencyReport {
    double dx_error = 0.0;       // central difference of delta u vs d_x delta u
    double dxx_error = 0.0;      // second difference vs d_xx delta u
    double dxdxhat_error = 0.0;  // mixed difference of delta^2 u vs closed form
    double directional_fd = 0.0;     // derivative of m -> delta u(m,x) toward delta_xhat
    double directional_exact = 0.0;  // delta^2 u(x,xhat) - <delta^2 u(x,.), m>
    double flat2_recovered = 0.0;    // directional_fd + <delta^2 u(x,.), m>
    double flat2_exact = 0.0;
    double flat2_error = 0.0;
    double symmetry_gap = 0.0;  // |d_x d_xh delta^2 u(x,xh) - d_xh d_x delta^2 u(xh,x)|
};

inline DerivativeConsistencyReport check_derivative_consistency(const CylindricalFunctional& u,
                                                                const EmpiricalMeasure& m, double x,
                                                                double xh, double h) {
    detail::require(h > 0.0, "finite-difference step must be positive");
    const Jet J = u.at(m);
    DerivativeConsistencyReport r;

    const double fp = u.flat(J, x + h);
    const double f0 = u.flat(J, x);
    const double fm = u.flat(J, x - h);
    r.dx_error = std::abs((fp - fm) / (2.0 * h) - u.dx_flat(J, x));
    r.dxx_error = std::abs((fp - 2.0 * f0 + fm) / (h * h) - u.dxx_flat(J, x));
    const double mixed = (u.flat2(J, x + h, xh + h) - u.flat2(J, x + h, xh - h) - u.flat2(J, x - h, xh + h) +
                          u.flat2(J, x - h, xh - h)) /
                         (4.0 * h * h);
    r.dxdxhat_error = std::abs(mixed - u.dxdxhat_flat2(J, x, xh));

    // Features are affine in the perturbation weight, so perturb them directly.
    std::vector<double> phi_hat(u.arity());
    u.basis(xh, 0, phi_hat);
    auto perturbed = [&](double eps) {
        std::vector<double> y(u.arity());
        for (std::size_t j = 0; j < y.size(); ++j) y[j] = (1.0 - eps) * J.y[j] + eps * phi_hat[j];
        return u.flat(u.jet(std::move(y)), x);
    };
    r.directional_fd = (perturbed(h) - perturbed(-h)) / (2.0 * h);
    const double avg = m.integrate([&](const Atom& a) { return u.flat2(J, x, a.location); });
    r.flat2_exact = u.flat2(J, x, xh);
    r.directional_exact = r.flat2_exact - avg;
    r.flat2_recovered = r.directional_fd + avg;
    r.flat2_error = std::abs(r.flat2_recovered - r.flat2_exact);
    r.symmetry_gap = std::abs(u.dxdxhat_flat2(J, x, xh) - u.dxdxhat_flat2(J, xh, x));
    return r;
}

/// Running suprema of |derivatives| over visited (m, x) pairs.
struct BoundednessLedger {
    double value = 0.0;
    double flat = 0.0;
    double dx_flat = 0.0;
    double dxx_flat = 0.0;
    double dxdxhat_flat2 = 0.0;
    double support_min = std::numeric_limits<double>::infinity();
    double support_max = -std::numeric_limits<double>::infinity();
    std::size_t visits = 0;
    bool nonfinite = false;

    void record(const CylindricalFunctional& u, const Jet& J, double x) {
        record(J.value, u.flat(J, x), u.dx_flat(J, x), u.dxx_flat(J, x), u.dxdxhat_flat2(J, x, x), x);
    }

    void record(double v, double f, double dx, double dxx, double dxdxhat, double x) {
        if (!(std::isfinite(v) && std::isfinite(f) && std::isfinite(dx) && std::isfinite(dxx) &&
              std::isfinite(dxdxhat) && std::isfinite(x)))
            nonfinite = true;
        value = std::max(value, std::abs(v));
        flat = std::max(flat, std::abs(f));
        dx_flat = std::max(dx_flat, std::abs(dx));
        dxx_flat = std::max(dxx_flat, std::abs(dxx));
        dxdxhat_flat2 = std::max(dxdxhat_flat2, std::abs(dxdxhat));
        support_min = std::min(support_min, x);
        support_max = std::max(support_max, x);
        ++visits;
    }

    void merge(const BoundednessLedger& o) {
        value = std::max(value, o.value);
        flat = std::max(flat, o.flat);
        dx_flat = std::max(dx_flat, o.dx_flat);
        dxx_flat = std::max(dxx_flat, o.dxx_flat);
        dxdxhat_flat2 = std::max(dxdxhat_flat2, o.dxdxhat_flat2);
        support_min = std::min(support_min, o.support_min);
        support_max = std::max(support_max, o.support_max);
        visits += o.visits;
        nonfinite = nonfinite || o.nonfinite;
    }

    bool finite() const {
        return !nonfinite && std::isfinite(value) && std::isfinite(flat) && std::isfinite(dx_flat) &&
               std::isfinite(dxx_flat) && std::isfinite(dxdxhat_flat2);
    }
};

}  // namespace mfito

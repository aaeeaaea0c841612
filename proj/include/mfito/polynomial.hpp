#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "mfito/errors.hpp"

namespace mfito {

/// Univariate polynomial with coefficients in ascending order.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<double> coefficients) : c_(std::move(coefficients)) {
        while (c_.size() > 1 && c_.back() == 0.0) c_.pop_back();
    }

    double operator()(double x) const {
        double acc = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
        return acc;
    }

    Polynomial derivative() const {
        if (c_.size() <= 1) return Polynomial({0.0});
        std::vector<double> d(c_.size() - 1);
        for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
        return Polynomial(std::move(d));
    }

    /// Antiderivative vanishing at zero.
    Polynomial antiderivative() const {
        std::vector<double> a(c_.size() + 1, 0.0);
        for (std::size_t k = 0; k < c_.size(); ++k) a[k + 1] = c_[k] / static_cast<double>(k + 1);
        return Polynomial(std::move(a));
    }

    int degree() const {
        if (c_.empty()) return 0;
        return static_cast<int>(c_.size()) - 1;
    }

    bool is_zero() const {
        return std::all_of(c_.begin(), c_.end(), [](double v) { return v == 0.0; });
    }

    std::span<const double> coefficients() const { return c_; }

private:
    std::vector<double> c_;
};

/// One term coef * y_1^e_1 * ... * y_k^e_k of a multivariate polynomial.
struct Monomial {
    double coefficient = 0.0;
    std::vector<int> exponents;

    int total_degree() const { return std::accumulate(exponents.begin(), exponents.end(), 0); }
};

/// Multivariate polynomial in k variables with closed-form gradient and Hessian.
class MultiPolynomial {
public:
    MultiPolynomial() = default;
    MultiPolynomial(std::size_t variables, std::vector<Monomial> terms)
        : k_(variables), terms_(std::move(terms)) {
        for (const auto& t : terms_) {
            detail::require(t.exponents.size() == k_, "monomial arity does not match variable count");
            for (int e : t.exponents) detail::require(e >= 0, "negative exponent in monomial");
        }
    }

    std::size_t variables() const { return k_; }
    std::span<const Monomial> terms() const { return terms_; }

    int total_degree() const {
        int d = 0;
        for (const auto& t : terms_) d = std::max(d, t.total_degree());
        return d;
    }

    /// Value, gradient and row-major Hessian at y.
    void jet(std::span<const double> y, double& value, std::vector<double>& grad,
             std::vector<double>& hess) const {
        value = 0.0;
        grad.assign(k_, 0.0);
        hess.assign(k_ * k_, 0.0);
        for (const auto& t : terms_) {
            value += t.coefficient * product(t.exponents, y, -1, -1);
            for (std::size_t j = 0; j < k_; ++j) {
                const int ej = t.exponents[j];
                if (ej == 0) continue;
                grad[j] += t.coefficient * ej * product(t.exponents, y, static_cast<int>(j), -1);
                for (std::size_t l = 0; l < k_; ++l) {
                    const int el = t.exponents[l];
                    double factor = 0.0;
                    if (l == j) {
                        if (ej < 2) continue;
                        factor = static_cast<double>(ej) * (ej - 1);
                    } else {
                        if (el == 0) continue;
                        factor = static_cast<double>(ej) * el;
                    }
                    hess[j * k_ + l] +=
                        t.coefficient * factor * product(t.exponents, y, static_cast<int>(j), static_cast<int>(l));
                }
            }
        }
    }

private:
    // Product of y_i^e_i with e_j (and e_l) lowered by one each; l == j lowers twice.
    static double product(const std::vector<int>& e, std::span<const double> y, int j, int l) {
        double p = 1.0;
        for (std::size_t i = 0; i < e.size(); ++i) {
            int power = e[i];
            if (static_cast<int>(i) == j) --power;
            if (static_cast<int>(i) == l) --power;
            for (int r = 0; r < power; ++r) p *= y[i];
        }
        return p;
    }

    std::size_t k_ = 0;
    std::vector<Monomial> terms_;
};

}  // namespace mfito

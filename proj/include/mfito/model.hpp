#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mfito/errors.hpp"
#include "mfito/measure.hpp"
#include "mfito/summation.hpp"

namespace mfito {

/// Cheap view of an empirical flow state: uniform weights over particles.
struct MeasureView {
    std::span<const double> particles;
    double mean = 0.0;

    static MeasureView of(std::span<const double> xs) { return {xs, pairwise_mean(xs)}; }
};

/// A model coefficient (t, m, x) -> value with a declared bound on |value|.
struct Coefficient {
    std::function<double(double, const MeasureView&, double)> fn;
    std::optional<double> constant;  // set when fn ignores its arguments
    double bound = std::numeric_limits<double>::infinity();

    static Coefficient zero() { return make_constant(0.0); }

    static Coefficient make_constant(double c, double bound = std::numeric_limits<double>::quiet_NaN()) {
        Coefficient k;
        k.fn = [c](double, const MeasureView&, double) { return c; };
        k.constant = c;
        k.bound = std::isnan(bound) ? std::abs(c) : bound;
        return k;
    }

    /// c0 + ct t + cx x + cm mean(m).
    static Coefficient affine(double c0, double ct, double cx, double cm, double bound) {
        if (ct == 0.0 && cx == 0.0 && cm == 0.0) return make_constant(c0, bound);
        Coefficient k;
        k.fn = [=](double t, const MeasureView& m, double x) { return c0 + ct * t + cx * x + cm * m.mean; };
        k.bound = bound;
        return k;
    }

    bool is_zero() const { return constant && *constant == 0.0; }

    double operator()(double t, const MeasureView& m, double x) const {
        return constant ? *constant : fn(t, m, x);
    }
};

/// Finite discrete law sum_k p_k delta_{y_k}.
struct DiscreteLaw {
    std::vector<double> values{1.0};
    std::vector<double> probs{1.0};

    static DiscreteLaw dirac(double y) { return {{y}, {1.0}}; }

    void validate() const {
        detail::require(!values.empty() && values.size() == probs.size(), "jump law needs matching values and probs");
        double s = 0.0;
        for (double p : probs) {
            detail::require(p >= 0.0, "jump law probabilities must be nonnegative");
            s += p;
        }
        detail::require(std::abs(s - 1.0) <= 1e-12, "jump law probabilities must sum to one");
    }

    /// Inverse-CDF sample from a uniform in (0,1).
    double sample(double u) const {
        double c = 0.0;
        for (std::size_t k = 0; k + 1 < values.size(); ++k) {
            c += probs[k];
            if (u <= c) return values[k];
        }
        return values.back();
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }

    double second_moment() const {
        double s = 0.0;
        for (std::size_t k = 0; k < values.size(); ++k) s += probs[k] * values[k] * values[k];
        return s;
    }
};

enum class InitialPlacement { quantile, sample };

/// dX = b dt + sigma dW + gamma dN + sigma0 dW0 + gamma0 dN0 with thinned
/// jump intensities lambda <= Lambda and lambda0 <= Lambda0.
struct ModelSpec {
    Coefficient b = Coefficient::zero();
    Coefficient sigma = Coefficient::zero();
    Coefficient sigma0 = Coefficient::zero();
    Coefficient gamma = Coefficient::zero();
    Coefficient gamma0 = Coefficient::zero();
    Coefficient lambda = Coefficient::zero();   // bound is the dominating rate Lambda
    Coefficient lambda0 = Coefficient::zero();  // bound is Lambda0
    DiscreteLaw nu;
    DiscreteLaw nu0;
    double horizon = 1.0;
    EmpiricalMeasure m0 = EmpiricalMeasure::dirac(0.0);
    InitialPlacement placement = InitialPlacement::quantile;

    double Lambda() const { return lambda.bound; }
    double Lambda0() const { return lambda0.bound; }

    /// Samples every coefficient on a probe set built from m0 and checks the
    /// declared bounds. Throws BoundViolation on the first failure.
    void validate() const {
        detail::require(horizon >= 0.0 && std::isfinite(horizon), "horizon must be finite and nonnegative");
        nu.validate();
        nu0.validate();
        detail::require(std::isfinite(Lambda()) && Lambda() >= 0.0, "idiosyncratic dominating rate must be finite");
        detail::require(std::isfinite(Lambda0()) && Lambda0() >= 0.0, "common dominating rate must be finite");
        std::vector<double> xs;
        for (const auto& a : m0.atoms()) xs.push_back(a.location);
        const MeasureView view = MeasureView::of(xs);
        for (double t : {0.0, 0.5 * horizon, horizon})
            for (double x0 : xs)
                for (double dx : {-1.0, 0.0, 1.0}) check_at(t, view, x0 + dx);
    }

    void check_at(double t, const MeasureView& m, double x) const {
        check_one("b", b, t, m, x);
        check_one("sigma", sigma, t, m, x);
        check_one("sigma0", sigma0, t, m, x);
        check_one("gamma", gamma, t, m, x);
        check_one("gamma0", gamma0, t, m, x);
        check_rate("lambda", lambda, t, m, x);
        check_rate("lambda0", lambda0, t, m, x);
    }

    static std::string where(double t, const MeasureView& m, double x) {
        std::ostringstream os;
        os.precision(17);
        os << "(t=" << t << ", mean(m)=" << m.mean << ", x=" << x << ")";
        return os.str();
    }

private:
    static void check_one(const char* name, const Coefficient& c, double t, const MeasureView& m, double x) {
        const double v = c(t, m, x);
        if (!(std::abs(v) <= c.bound))
            throw BoundViolation(std::string(name) + " = " + std::to_string(v) + " exceeds its declared bound " +
                                 std::to_string(c.bound) + " at " + where(t, m, x));
    }
    static void check_rate(const char* name, const Coefficient& c, double t, const MeasureView& m, double x) {
        const double v = c(t, m, x);
        if (!(v >= 0.0))
            throw BoundViolation(std::string(name) + " is negative at " + where(t, m, x));
        check_one(name, c, t, m, x);
    }
};

}  // namespace mfito

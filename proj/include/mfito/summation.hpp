#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace mfito {

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// length of the input, so results are reproducible for a fixed input order.
inline double pairwise_sum(std::span<const double> xs) {
    constexpr std::size_t kLeaf = 8;
    const std::size_t n = xs.size();
    if (n <= kLeaf) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double pairwise_mean(std::span<const double> xs) {
    return xs.empty() ? 0.0 : pairwise_sum(xs) / static_cast<double>(xs.size());
}

/// Sample statistics of a set of scalar observations.
struct SampleStats {
    std::size_t count = 0;
    double mean = 0.0;
    double sd = 0.0;   // unbiased sample standard deviation
    double rms = 0.0;  // root mean square (about zero)

    double standard_error() const {
        return count > 0 ? sd / std::sqrt(static_cast<double>(count)) : 0.0;
    }
};

inline SampleStats sample_stats(std::span<const double> xs) {
    SampleStats st;
    st.count = xs.size();
    if (xs.empty()) return st;
    st.mean = pairwise_mean(xs);
    std::vector<double> dev(xs.size());
    std::vector<double> sq(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        dev[i] = (xs[i] - st.mean) * (xs[i] - st.mean);
        sq[i] = xs[i] * xs[i];
    }
    st.rms = std::sqrt(pairwise_mean(sq));
    if (xs.size() > 1) st.sd = std::sqrt(pairwise_sum(dev) / static_cast<double>(xs.size() - 1));
    return st;
}

}  // namespace mfito

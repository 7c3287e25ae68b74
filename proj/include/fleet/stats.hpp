#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "fleet/error.hpp"

namespace fleet {

// Empirical quantile with linear interpolation between order statistics,
// rank h = p*(n-1) (numpy's default, R type 7). Shared by the speed-threshold
// and null-calibration paths so both use the identical definition.
inline double percentile_linear(std::vector<double> values, double p) {
    if (values.empty()) raise(errc::empty_sample, "percentile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) raise(errc::config_invalid, "percentile fraction must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

// Fixed-order summation; results must not depend on thread count, so all
// reductions run in index order.
inline double mean_of(std::span<const double> v) {
    if (v.empty()) raise(errc::empty_sample, "mean of an empty sample");
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
}

struct CentralMoments {
    double mean = 0.0;
    double m2 = 0.0;  // population variance
    double m4 = 0.0;
};

inline CentralMoments central_moments(std::span<const double> v) {
    CentralMoments mom;
    mom.mean = mean_of(v);
    const double n = static_cast<double>(v.size());
    double m2 = 0.0, m4 = 0.0;
    for (const double x : v) {
        const double d = x - mom.mean;
        const double d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    mom.m2 = m2 / n;
    mom.m4 = m4 / n;
    return mom;
}

// Pearson (non-excess) kurtosis m4/m2^2 with population moments.
inline double pearson_kurtosis(std::span<const double> v) {
    const CentralMoments mom = central_moments(v);
    if (mom.m2 <= 0.0) raise(errc::degenerate_sample, "kurtosis of a zero-variance sample");
    return mom.m4 / (mom.m2 * mom.m2);
}

// Standard deviation with the n-1 denominator (as used by the bandwidth rule).
inline double sample_stddev(std::span<const double> v) {
    if (v.size() < 2) raise(errc::empty_sample, "sample stddev needs at least 2 values");
    const double mean = mean_of(v);
    double s = 0.0;
    for (const double x : v) {
        const double d = x - mean;
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace fleet

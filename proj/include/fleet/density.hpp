#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <vector>

#include "fleet/error.hpp"
#include "fleet/geo.hpp"
#include "fleet/panel.hpp"
#include "fleet/parallel.hpp"
#include "fleet/stats.hpp"

namespace fleet {

// Between-vessel distances over the vessels present at hour t, in row-major
// pair order. Throws when fewer than 2 vessels are present; callers that walk
// a whole panel should use build_sample_store, which flags such hours instead.
inline DistanceSample distance_distribution(const Panel& panel, std::size_t t) {
    std::vector<GeoPoint> present;
    present.reserve(panel.vessel_count());
    for (std::size_t v = 0; v < panel.vessel_count(); ++v)
        if (panel.present(v, t)) present.push_back(panel.position(v, t));
    if (present.size() < 2)
        raise(errc::insufficient_vessels,
              "fewer than 2 vessels present at hour index " + std::to_string(t));
    return pairwise_distances(present, static_cast<std::int64_t>(t));
}

// Per-hour distance samples for a panel. Samples are stored sorted ascending
// (the KS scan needs order; the multiset is unchanged). Hours with fewer than
// 2 present vessels are flagged invalid, not fatal.
struct SampleStore {
    std::vector<std::optional<DistanceSample>> by_hour;

    std::size_t size() const { return by_hour.size(); }
    bool valid(std::size_t t) const { return t < by_hour.size() && by_hour[t].has_value(); }
};

inline SampleStore build_sample_store(const Panel& panel, unsigned threads = 1) {
    SampleStore store;
    store.by_hour.resize(panel.hour_count());
    parallel_for(panel.hour_count(), threads, [&](std::size_t t) {
        if (panel.present_count(t) < 2) return;
        DistanceSample s = distance_distribution(panel, t);
        std::sort(s.distances.begin(), s.distances.end());
        store.by_hour[t] = std::move(s);
    });
    return store;
}

struct GridSpec {
    double min_km = 0.0;
    double max_km = 1600.0;  // covers the regional diagonal; tail mass beyond is truncated
    std::size_t points = 512;

    void validate() const {
        if (!(max_km > min_km) || points < 2)
            raise(errc::config_invalid, "density grid must be ascending with at least 2 points");
    }
    double at(std::size_t i) const {
        return min_km + (max_km - min_km) * static_cast<double>(i) / static_cast<double>(points - 1);
    }
};

struct DensityEstimate {
    std::vector<double> grid;     // ascending km values
    std::vector<double> density;  // >= 0 per grid point
    double bandwidth = 0.0;       // km
};

// Rule-of-thumb bandwidth 0.9 * min(sigma, IQR/1.34) * n^(-1/5), sigma with
// the n-1 denominator; falls back to sigma when the IQR collapses.
inline double silverman_bandwidth(std::span<const double> values) {
    if (values.size() < 2) raise(errc::empty_sample, "bandwidth needs at least 2 values");
    const double sigma = sample_stddev(values);
    if (!(sigma > 0.0)) raise(errc::degenerate_sample, "zero-variance sample has no bandwidth");
    std::vector<double> copy(values.begin(), values.end());
    std::sort(copy.begin(), copy.end());
    const double iqr = percentile_linear(copy, 0.75) - percentile_linear(copy, 0.25);
    double spread = std::min(sigma, iqr / 1.34);
    if (!(spread > 0.0)) spread = sigma;
    return 0.9 * spread * std::pow(static_cast<double>(values.size()), -0.2);
}

// Gaussian-kernel KDE evaluated on the grid, fixed accumulation order.
inline DensityEstimate kde_pdf(const DistanceSample& sample, const GridSpec& grid = {},
                               std::optional<double> bandwidth = std::nullopt) {
    grid.validate();
    const auto& xs = sample.distances;
    if (xs.size() < 2) raise(errc::empty_sample, "KDE needs at least 2 values");
    const double h = bandwidth ? *bandwidth : silverman_bandwidth(xs);
    if (!(h > 0.0)) raise(errc::config_invalid, "bandwidth must be > 0");

    DensityEstimate out;
    out.bandwidth = h;
    out.grid.resize(grid.points);
    out.density.resize(grid.points);
    const double norm = 1.0 / (static_cast<double>(xs.size()) * h * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t g = 0; g < grid.points; ++g) {
        const double x = grid.at(g);
        double acc = 0.0;
        for (const double xi : xs) {
            const double u = (x - xi) / h;
            acc += std::exp(-0.5 * u * u);
        }
        out.grid[g] = x;
        out.density[g] = acc * norm;
    }
    return out;
}

inline double trapezoid_mass(const DensityEstimate& d) {
    double mass = 0.0;
    for (std::size_t i = 1; i < d.grid.size(); ++i)
        mass += 0.5 * (d.density[i - 1] + d.density[i]) * (d.grid[i] - d.grid[i - 1]);
    return mass;
}

inline std::size_t argmax_index(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

// Density matrix export: rows are grid km values, one column per hour index,
// cells left empty where the hour had no valid sample.
inline void write_density_matrix_csv(const std::vector<std::optional<DensityEstimate>>& per_hour,
                                     const GridSpec& grid, std::ostream& out) {
    out << "km";
    for (std::size_t t = 0; t < per_hour.size(); ++t) out << ',' << t;
    out << '\n';
    for (std::size_t g = 0; g < grid.points; ++g) {
        out << format_double(grid.at(g));
        for (const auto& d : per_hour) {
            out << ',';
            if (d) out << format_double(d->density[g]);
        }
        out << '\n';
    }
}

}  // namespace fleet

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "fleet/error.hpp"

namespace fleet {

// Fixed mean Earth radius. One constant keeps every distance in the pipeline
// reproducible bit-for-bit; the quarter-great-circle check pins it.
inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kKmPerDegLat = kEarthRadiusKm * std::numbers::pi / 180.0;
inline constexpr double kHalfCircumferenceKm = kEarthRadiusKm * std::numbers::pi;

struct GeoPoint {
    double lat = 0.0;  // degrees in [-90, 90]
    double lon = 0.0;  // degrees in [-180, 180]

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

inline bool valid_coordinates(const GeoPoint& p) {
    return std::isfinite(p.lat) && std::isfinite(p.lon) &&
           p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

inline void require_valid(const GeoPoint& p) {
    if (!valid_coordinates(p))
        raise(errc::coordinate_domain,
              "coordinates out of domain: lat=" + std::to_string(p.lat) +
                  " lon=" + std::to_string(p.lon));
}

// Wraps a longitude into [-180, 180]. Applied at parse time, not in geo ops.
inline double normalize_lon(double lon) {
    if (lon >= -180.0 && lon <= 180.0) return lon;
    double x = std::fmod(lon + 180.0, 360.0);
    if (x < 0.0) x += 360.0;
    return x - 180.0;
}

// Great-circle distance on the fixed-radius sphere. The absolute deltas make
// the result bitwise symmetric in its arguments.
inline double haversine_km(const GeoPoint& a, const GeoPoint& b) {
    require_valid(a);
    require_valid(b);
    const double half_dlat = std::fabs(b.lat - a.lat) * 0.5 * kDegToRad;
    const double half_dlon = std::fabs(b.lon - a.lon) * 0.5 * kDegToRad;
    const double sl = std::sin(half_dlat);
    const double so = std::sin(half_dlon);
    const double h = sl * sl + std::cos(a.lat * kDegToRad) * std::cos(b.lat * kDegToRad) * so * so;
    // h can exceed 1 by rounding for near-antipodal points
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
}

// The between-vessel distances at one timestep: the strict upper triangle of
// the vessel-by-vessel distance matrix as a flat multiset.
struct DistanceSample {
    std::int64_t time_index = 0;
    std::vector<double> distances;
};

// Row-major by input order: (0,1), (0,2), ..., (1,2), ...
inline DistanceSample pairwise_distances(std::span<const GeoPoint> positions, std::int64_t time_index) {
    const std::size_t n = positions.size();
    if (n < 2)
        raise(errc::insufficient_vessels,
              "pairwise distances need at least 2 positions, got " + std::to_string(n));
    DistanceSample out;
    out.time_index = time_index;
    out.distances.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            out.distances.push_back(haversine_km(positions[i], positions[j]));
    return out;
}

}  // namespace fleet

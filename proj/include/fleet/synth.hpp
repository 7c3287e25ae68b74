#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fleet/error.hpp"
#include "fleet/geo.hpp"
#include "fleet/panel.hpp"
#include "fleet/time.hpp"

namespace fleet {

// Deterministic draws on top of mt19937_64. The standard distributions have
// implementation-defined sequences, so every transform here is an explicit
// formula and the draw order is fixed; a given build reproduces panels
// bit-for-bit from the seed alone.
class SynthRng {
public:
    explicit SynthRng(std::uint64_t seed) : gen_(seed) {}

    // [0, 1)
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // (0, 1), safe for log()
    double uniform_open01() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53; }

    // Box-Muller pair of independent standard normals.
    std::pair<double, double> normal_pair() {
        const double r = std::sqrt(-2.0 * std::log(uniform_open01()));
        const double theta = 2.0 * std::numbers::pi * uniform01();
        return {r * std::cos(theta), r * std::sin(theta)};
    }

    // Uniform index in [0, n).
    std::size_t below(std::size_t n) {
        return std::min(n - 1, static_cast<std::size_t>(uniform01() * static_cast<double>(n)));
    }

    // Fisher-Yates with explicit index draws.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 gen_;
};

// Local equirectangular step geometry: km offsets become degree offsets at the
// current latitude. Adequate at regional scale.
inline GeoPoint offset_km(const GeoPoint& p, double east_km, double north_km) {
    const double lat = p.lat + north_km / kKmPerDegLat;
    const double cos_lat = std::max(std::cos(p.lat * kDegToRad), 1e-6);
    const double lon = p.lon + east_km / (kKmPerDegLat * cos_lat);
    return GeoPoint{std::clamp(lat, -90.0, 90.0), normalize_lon(lon)};
}

struct Hotspot {
    GeoPoint center;
    double radius_km = 0.0;
};

inline constexpr std::int64_t kDefaultScenarioStart = 1577836800;  // 2020-01-01T00:00:00Z

struct FleetScenario {
    std::size_t n_vessels = 0;
    std::vector<Hotspot> hotspots;
    std::int64_t duration_hours = 0;
    double step_noise_km = 0.0;       // per-component Gaussian sigma per hour
    double attraction_strength = 0.0;  // fraction of the way toward the hotspot per hour
    std::uint64_t seed = 0;
    std::int64_t start_time = kDefaultScenarioStart;

    void validate() const {
        if (n_vessels < 2) raise(errc::config_invalid, "scenario needs at least 2 vessels");
        if (duration_hours < 2) raise(errc::config_invalid, "scenario needs at least 2 hours");
        if (hotspots.empty()) raise(errc::config_invalid, "scenario needs at least one hotspot");
        for (const auto& h : hotspots) {
            require_valid(h.center);
            if (!(h.radius_km > 0.0)) raise(errc::config_invalid, "hotspot radius must be > 0");
        }
        if (step_noise_km < 0.0) raise(errc::config_invalid, "step_noise_km must be >= 0");
        if (attraction_strength < 0.0 || attraction_strength > 1.0)
            raise(errc::config_invalid, "attraction_strength must lie in [0, 1]");
        if (start_time % kSecondsPerHour != 0)
            raise(errc::config_invalid, "scenario start_time must be a whole hour");
    }
};

// A dark-vessel episode: during [start_hour, end_hour], a seeded fraction of
// the vessels inside avoidance_radius_km at entry drift radially away from the
// location instead of taking their normal step.
struct DarkEvent {
    GeoPoint location;
    std::int64_t start_hour = 0;  // panel hour indexes, inclusive
    std::int64_t end_hour = 0;
    double avoidance_radius_km = 0.0;
    double repulsion_km_per_hour = 0.0;
    double response_fraction = 0.0;

    void validate(std::int64_t panel_hours) const {
        require_valid(location);
        if (start_hour < 0 || start_hour >= end_hour || end_hour >= panel_hours)
            raise(errc::config_invalid, "event window must satisfy 0 <= start < end < panel hours");
        if (!(avoidance_radius_km > 0.0)) raise(errc::config_invalid, "avoidance radius must be > 0");
        if (repulsion_km_per_hour < 0.0) raise(errc::config_invalid, "repulsion must be >= 0");
        if (response_fraction < 0.0 || response_fraction > 1.0)
            raise(errc::config_invalid, "response_fraction must lie in [0, 1]");
    }
};

// Hotspot-attracted random walk, every vessel present every hour. The step is
// written as center + (1-strength)*(prev-center) + noise so that strength 1
// with zero noise lands exactly on the center.
inline Panel generate_fleet(const FleetScenario& scenario) {
    scenario.validate();
    SynthRng rng(scenario.seed);

    std::vector<std::string> ids;
    ids.reserve(scenario.n_vessels);
    for (std::size_t v = 0; v < scenario.n_vessels; ++v) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "V%04zu", v);
        ids.emplace_back(buf);
    }
    std::vector<std::int64_t> hours;
    hours.reserve(static_cast<std::size_t>(scenario.duration_hours));
    for (std::int64_t t = 0; t < scenario.duration_hours; ++t)
        hours.push_back(scenario.start_time + t * kSecondsPerHour);
    Panel panel(std::move(ids), std::move(hours));

    std::vector<std::size_t> assignment(scenario.n_vessels);
    for (std::size_t v = 0; v < scenario.n_vessels; ++v)
        assignment[v] = rng.below(scenario.hotspots.size());

    std::vector<GeoPoint> current(scenario.n_vessels);
    for (std::size_t v = 0; v < scenario.n_vessels; ++v) {
        const Hotspot& spot = scenario.hotspots[assignment[v]];
        const double r = spot.radius_km * std::sqrt(rng.uniform01());
        const double theta = 2.0 * std::numbers::pi * rng.uniform01();
        current[v] = offset_km(spot.center, r * std::cos(theta), r * std::sin(theta));
        panel.set_cell(v, 0, current[v], true);
    }

    const double keep = 1.0 - scenario.attraction_strength;
    for (std::size_t t = 1; t < panel.hour_count(); ++t) {
        for (std::size_t v = 0; v < scenario.n_vessels; ++v) {
            const GeoPoint& center = scenario.hotspots[assignment[v]].center;
            GeoPoint next{center.lat + keep * (current[v].lat - center.lat),
                          center.lon + keep * (current[v].lon - center.lon)};
            if (scenario.step_noise_km > 0.0) {
                const auto [gx, gy] = rng.normal_pair();
                next = offset_km(next, scenario.step_noise_km * gx, scenario.step_noise_km * gy);
            }
            current[v] = next;
            panel.set_cell(v, t, next, true);
        }
    }
    return panel;
}

// Applies a DarkEvent to an existing panel. Selection happens at the entry
// hour; overridden steps are the transitions into hours start+1..end. Every
// other cell is copied bit-identically.
inline Panel inject_event(Panel panel, const DarkEvent& event, std::uint64_t seed) {
    event.validate(static_cast<std::int64_t>(panel.hour_count()));
    if (event.response_fraction == 0.0 || event.repulsion_km_per_hour == 0.0) return panel;

    const auto start = static_cast<std::size_t>(event.start_hour);
    std::vector<std::size_t> in_radius;
    for (std::size_t v = 0; v < panel.vessel_count(); ++v)
        if (panel.present(v, start) &&
            haversine_km(panel.position(v, start), event.location) <= event.avoidance_radius_km)
            in_radius.push_back(v);
    if (in_radius.empty()) return panel;

    SynthRng rng(seed);
    rng.shuffle(in_radius);
    const auto responders = static_cast<std::size_t>(
        std::floor(event.response_fraction * static_cast<double>(in_radius.size()) + 0.5));
    in_radius.resize(responders);

    for (const std::size_t v : in_radius) {
        GeoPoint pos = panel.position(v, start);
        for (std::size_t t = start + 1; t <= static_cast<std::size_t>(event.end_hour); ++t) {
            double east = (pos.lon - event.location.lon) * kKmPerDegLat *
                          std::cos(pos.lat * kDegToRad);
            double north = (pos.lat - event.location.lat) * kKmPerDegLat;
            const double norm = std::hypot(east, north);
            if (norm > 0.0) {
                east /= norm;
                north /= norm;
            } else {
                east = 1.0;  // vessel exactly at the event location: drift east
                north = 0.0;
            }
            pos = offset_km(pos, event.repulsion_km_per_hour * east,
                            event.repulsion_km_per_hour * north);
            panel.set_cell(v, t, pos, true);
        }
    }
    return panel;
}

// --- config (de)serialization ---------------------------------------------------

inline FleetScenario scenario_from_json(const nlohmann::json& j) {
    FleetScenario s;
    try {
        s.n_vessels = j.at("n_vessels").get<std::size_t>();
        s.duration_hours = j.at("duration_hours").get<std::int64_t>();
        s.step_noise_km = j.value("step_noise_km", 0.0);
        s.attraction_strength = j.value("attraction_strength", 0.0);
        s.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("start_time"))
            s.start_time = parse_utc_or_throw(j["start_time"].get<std::string>());
        for (const auto& h : j.at("hotspots"))
            s.hotspots.push_back(Hotspot{GeoPoint{h.at("lat").get<double>(), h.at("lon").get<double>()},
                                         h.at("radius_km").get<double>()});
    } catch (const nlohmann::json::exception& e) {
        raise(errc::config_invalid, "scenario config malformed: " + std::string(e.what()));
    }
    s.validate();
    return s;
}

inline DarkEvent event_from_json(const nlohmann::json& j) {
    DarkEvent e;
    try {
        e.location = GeoPoint{j.at("lat").get<double>(), j.at("lon").get<double>()};
        e.start_hour = j.at("start_hour").get<std::int64_t>();
        e.end_hour = j.at("end_hour").get<std::int64_t>();
        e.avoidance_radius_km = j.at("avoidance_radius_km").get<double>();
        e.repulsion_km_per_hour = j.at("repulsion_km_per_hour").get<double>();
        e.response_fraction = j.at("response_fraction").get<double>();
    } catch (const nlohmann::json::exception& ex) {
        raise(errc::config_invalid, "event config malformed: " + std::string(ex.what()));
    }
    return e;
}

}  // namespace fleet

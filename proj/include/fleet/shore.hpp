#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleet/error.hpp"
#include "fleet/geo.hpp"

namespace fleet {

// Shore-exclusion geometry: polygons with optional holes, loaded from GeoJSON.
// Containment is even-odd ray casting in plain lat/lon coordinates, which is
// adequate at the regional scales this pipeline targets (no antimeridian or
// polar handling).
struct ShorePolygons {
    using Ring = std::vector<GeoPoint>;
    std::vector<std::vector<Ring>> polygons;  // each polygon: outer ring + holes

    bool empty() const { return polygons.empty(); }

    bool contains(const GeoPoint& p) const {
        for (const auto& rings : polygons) {
            unsigned crossings = 0;
            for (const auto& ring : rings) {
                const std::size_t n = ring.size();
                for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
                    const GeoPoint& a = ring[i];
                    const GeoPoint& b = ring[j];
                    if ((a.lat > p.lat) != (b.lat > p.lat) &&
                        p.lon < (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon)
                        ++crossings;
                }
            }
            if (crossings % 2 == 1) return true;
        }
        return false;
    }
};

namespace detail {

inline ShorePolygons::Ring ring_from_json(const nlohmann::json& j) {
    ShorePolygons::Ring ring;
    for (const auto& coord : j) {
        if (!coord.is_array() || coord.size() < 2)
            raise(errc::config_invalid, "GeoJSON ring coordinate is not a [lon, lat] pair");
        // GeoJSON order is [lon, lat]
        ring.push_back(GeoPoint{coord[1].get<double>(), coord[0].get<double>()});
    }
    if (ring.size() < 3) raise(errc::config_invalid, "GeoJSON ring has fewer than 3 points");
    return ring;
}

inline void add_geometry(ShorePolygons& out, const nlohmann::json& geom) {
    const std::string type = geom.value("type", "");
    if (type == "Polygon") {
        std::vector<ShorePolygons::Ring> rings;
        for (const auto& r : geom.at("coordinates")) rings.push_back(ring_from_json(r));
        out.polygons.push_back(std::move(rings));
    } else if (type == "MultiPolygon") {
        for (const auto& poly : geom.at("coordinates")) {
            std::vector<ShorePolygons::Ring> rings;
            for (const auto& r : poly) rings.push_back(ring_from_json(r));
            out.polygons.push_back(std::move(rings));
        }
    } else {
        raise(errc::config_invalid, "unsupported GeoJSON geometry type: \"" + type + "\"");
    }
}

}  // namespace detail

inline ShorePolygons shore_from_geojson(const nlohmann::json& j) {
    ShorePolygons out;
    const std::string type = j.value("type", "");
    if (type == "FeatureCollection") {
        for (const auto& f : j.at("features")) detail::add_geometry(out, f.at("geometry"));
    } else if (type == "Feature") {
        detail::add_geometry(out, j.at("geometry"));
    } else {
        detail::add_geometry(out, j);
    }
    return out;
}

inline ShorePolygons load_shore_geojson(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(errc::input_not_found, "cannot open shore GeoJSON: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(errc::config_invalid, "shore GeoJSON parse failed: " + std::string(e.what()));
    }
    return shore_from_geojson(j);
}

}  // namespace fleet

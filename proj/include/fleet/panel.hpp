#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleet/error.hpp"
#include "fleet/geo.hpp"
#include "fleet/time.hpp"

namespace fleet {

// Shortest round-trip decimal form; used for every double written to CSV so
// that byte-identical reruns are achievable.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// Balanced vessel-by-hour grid of interpolated positions. Every (vessel, hour)
// cell exists; `presence` marks which cells hold a valid position.
class Panel {
public:
    Panel() = default;
    Panel(std::vector<std::string> vessel_ids, std::vector<std::int64_t> hours)
        : vessel_ids_(std::move(vessel_ids)),
          hours_(std::move(hours)),
          positions_(vessel_ids_.size() * hours_.size()),
          presence_(vessel_ids_.size() * hours_.size(), 0) {
        validate_hours();
    }

    std::size_t vessel_count() const { return vessel_ids_.size(); }
    std::size_t hour_count() const { return hours_.size(); }

    const std::vector<std::string>& vessel_ids() const { return vessel_ids_; }
    const std::vector<std::int64_t>& hours() const { return hours_; }

    const GeoPoint& position(std::size_t v, std::size_t t) const { return positions_[v * hours_.size() + t]; }
    bool present(std::size_t v, std::size_t t) const { return presence_[v * hours_.size() + t] != 0; }

    void set_cell(std::size_t v, std::size_t t, const GeoPoint& p, bool present) {
        positions_[v * hours_.size() + t] = p;
        presence_[v * hours_.size() + t] = present ? 1 : 0;
    }

    std::size_t present_count(std::size_t t) const {
        std::size_t n = 0;
        for (std::size_t v = 0; v < vessel_ids_.size(); ++v) n += present(v, t);
        return n;
    }

    std::size_t present_total() const {
        std::size_t n = 0;
        for (const auto b : presence_) n += b;
        return n;
    }

    friend bool operator==(const Panel&, const Panel&) = default;

private:
    void validate_hours() const {
        for (std::size_t t = 1; t < hours_.size(); ++t)
            if (hours_[t] - hours_[t - 1] != kSecondsPerHour)
                raise(errc::corrupt_input, "panel hours are not consecutive hourly instants");
    }

    std::vector<std::string> vessel_ids_;
    std::vector<std::int64_t> hours_;
    std::vector<GeoPoint> positions_;   // vessel-major
    std::vector<std::uint8_t> presence_;
};

inline nlohmann::json panel_to_json(const Panel& panel) {
    nlohmann::json j;
    j["schema"] = "fleet-panel/1";
    j["vessel_ids"] = panel.vessel_ids();
    nlohmann::json hours = nlohmann::json::array();
    for (const auto h : panel.hours()) hours.push_back(format_utc(h));
    j["hours"] = std::move(hours);
    nlohmann::json grid = nlohmann::json::array();
    for (std::size_t v = 0; v < panel.vessel_count(); ++v) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t t = 0; t < panel.hour_count(); ++t) {
            if (panel.present(v, t)) {
                const GeoPoint& p = panel.position(v, t);
                row.push_back(nlohmann::json::array({p.lat, p.lon}));
            } else {
                row.push_back(nullptr);
            }
        }
        grid.push_back(std::move(row));
    }
    j["positions"] = std::move(grid);
    return j;
}

inline Panel panel_from_json(const nlohmann::json& j) {
    try {
        if (j.value("schema", "") != "fleet-panel/1")
            raise(errc::corrupt_input, "not a fleet-panel/1 document");
        std::vector<std::string> ids = j.at("vessel_ids").get<std::vector<std::string>>();
        std::vector<std::int64_t> hours;
        for (const auto& h : j.at("hours"))
            hours.push_back(parse_utc_or_throw(h.get<std::string>(), errc::corrupt_input));
        Panel panel(std::move(ids), std::move(hours));
        const auto& grid = j.at("positions");
        if (grid.size() != panel.vessel_count())
            raise(errc::corrupt_input, "positions row count does not match vessel_ids");
        for (std::size_t v = 0; v < panel.vessel_count(); ++v) {
            const auto& row = grid[v];
            if (row.size() != panel.hour_count())
                raise(errc::corrupt_input, "positions column count does not match hours");
            for (std::size_t t = 0; t < panel.hour_count(); ++t) {
                if (row[t].is_null()) continue;
                const GeoPoint p{row[t][0].get<double>(), row[t][1].get<double>()};
                require_valid(p);
                panel.set_cell(v, t, p, true);
            }
        }
        return panel;
    } catch (const nlohmann::json::exception& e) {
        raise(errc::corrupt_input, "panel JSON malformed: " + std::string(e.what()));
    }
}

inline void save_panel(const Panel& panel, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(errc::io_error, "cannot write " + path);
    out << panel_to_json(panel).dump() << '\n';
    if (!out) raise(errc::io_error, "write failed: " + path);
}

inline Panel load_panel(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(errc::input_not_found, "cannot open panel: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(errc::corrupt_input, "panel JSON parse failed: " + std::string(e.what()));
    }
    return panel_from_json(j);
}

// Flat export: vessel_id,hour,lat,lon,present. Absent cells leave lat/lon empty.
inline void write_panel_csv(const Panel& panel, std::ostream& out) {
    out << "vessel_id,hour,lat,lon,present\n";
    for (std::size_t v = 0; v < panel.vessel_count(); ++v) {
        for (std::size_t t = 0; t < panel.hour_count(); ++t) {
            out << panel.vessel_ids()[v] << ',' << format_utc(panel.hours()[t]) << ',';
            if (panel.present(v, t)) {
                const GeoPoint& p = panel.position(v, t);
                out << format_double(p.lat) << ',' << format_double(p.lon) << ",1\n";
            } else {
                out << ",,0\n";
            }
        }
    }
}

}  // namespace fleet

#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fleet/error.hpp"
#include "fleet/geo.hpp"
#include "fleet/panel.hpp"
#include "fleet/shore.hpp"
#include "fleet/stats.hpp"
#include "fleet/time.hpp"

namespace fleet {

// One raw position report. speed_kmh is derived from the previous ping of the
// same vessel and is absent for the vessel's first ping.
struct VesselPing {
    std::string vessel_id;
    std::int64_t timestamp = 0;  // unix seconds, UTC
    GeoPoint position;
    std::optional<double> speed_kmh;

    friend bool operator==(const VesselPing&, const VesselPing&) = default;
};

struct RecordError {
    std::size_t line = 0;  // 1-based line number in the source
    std::string message;
};

struct BoundingBox {
    double lat_min = -90.0, lat_max = 90.0;
    double lon_min = -180.0, lon_max = 180.0;

    bool contains(const GeoPoint& p) const {
        return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min && p.lon <= lon_max;
    }
};

struct TimeWindow {
    std::int64_t start = 0;
    std::int64_t end = 0;  // start < end, unix seconds
};

struct CleanConfig {
    // Fixed cutoff wins when both it and the percentile rule are set.
    std::optional<double> speed_cutoff_kmh = 32.0;
    double speed_percentile = 0.99;
    double min_daily_travel_km = 1.0;
    int max_gap_hours = 24;
    std::optional<BoundingBox> bbox;
    std::optional<TimeWindow> time_window;
    std::string shore_geojson_path;
    ShorePolygons shore;

    void validate() const {
        if (speed_cutoff_kmh && !(*speed_cutoff_kmh > 0.0))
            raise(errc::config_invalid, "speed_cutoff_kmh must be > 0");
        if (!(speed_percentile > 0.0 && speed_percentile < 1.0))
            raise(errc::config_invalid, "speed_percentile must lie in (0, 1)");
        if (min_daily_travel_km < 0.0)
            raise(errc::config_invalid, "min_daily_travel_km must be >= 0");
        if (max_gap_hours < 1) raise(errc::config_invalid, "max_gap_hours must be >= 1");
        if (time_window && !(time_window->start < time_window->end))
            raise(errc::config_invalid, "time_window start must precede end");
        if (bbox && (!(bbox->lat_min < bbox->lat_max) || !(bbox->lon_min < bbox->lon_max)))
            raise(errc::config_invalid, "bbox must have positive extent");
    }
};

struct CleanReport {
    std::size_t input_count = 0;
    std::size_t survivors = 0;
    std::size_t removed_speed = 0;
    std::size_t removed_shore = 0;
    std::size_t removed_window = 0;    // bbox and/or time-window rule
    std::size_t removed_mobility = 0;  // pings of vessels dropped for immobility
    std::size_t vessels_removed_mobility = 0;
    double speed_cutoff_kmh = 0.0;  // the cutoff actually applied
    std::vector<std::string> warnings;

    std::size_t removed_total() const {
        return removed_speed + removed_shore + removed_window + removed_mobility;
    }
};

inline nlohmann::json clean_report_to_json(const CleanReport& r) {
    return nlohmann::json{
        {"schema", "fleet-clean-report/1"},
        {"input_pings", r.input_count},
        {"survivors", r.survivors},
        {"removed",
         {{"speed", r.removed_speed},
          {"shore", r.removed_shore},
          {"window", r.removed_window},
          {"mobility", r.removed_mobility}}},
        {"vessels_removed_mobility", r.vessels_removed_mobility},
        {"speed_cutoff_kmh", r.speed_cutoff_kmh},
        {"warnings", r.warnings}};
}

struct ParseResult {
    std::vector<VesselPing> pings;  // sorted by (vessel_id, timestamp), deduped
    std::vector<RecordError> errors;
};

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline double ping_speed_kmh(const VesselPing& prev, const VesselPing& cur) {
    const double dt_hours = static_cast<double>(cur.timestamp - prev.timestamp) / 3600.0;
    return haversine_km(prev.position, cur.position) / dt_hours;
}

}  // namespace detail

// Parses delimited ping records: header row, columns mmsi,timestamp,lat,lon
// (any order, extra columns ignored), ISO-8601 UTC timestamps. Malformed rows
// become RecordErrors, never silent drops. Output is sorted by
// (vessel_id, timestamp) with exact duplicates removed and per-vessel speeds
// derived; rows that repeat a vessel's timestamp with a different position are
// reported as errors and skipped.
inline ParseResult parse_pings(std::istream& in) {
    ParseResult out;
    std::string line;
    if (!std::getline(in, line)) return out;  // empty stream -> ([], [])

    const auto header = detail::split_csv(line);
    std::map<std::string, std::size_t, std::less<>> columns;
    for (std::size_t i = 0; i < header.size(); ++i) columns.emplace(detail::trim(header[i]), i);
    for (const char* name : {"mmsi", "timestamp", "lat", "lon"})
        if (!columns.count(name))
            raise(errc::corrupt_input, std::string("input header is missing column \"") + name + "\"");
    const std::size_t c_id = columns["mmsi"], c_ts = columns["timestamp"];
    const std::size_t c_lat = columns["lat"], c_lon = columns["lon"];
    const std::size_t min_fields = std::max({c_id, c_ts, c_lat, c_lon}) + 1;

    std::size_t line_no = 1, data_rows = 0;
    struct Raw {
        VesselPing ping;
        std::size_t line;
    };
    std::vector<Raw> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        ++data_rows;
        const auto fields = detail::split_csv(line);
        if (fields.size() < min_fields) {
            out.errors.push_back({line_no, "too few fields"});
            continue;
        }
        const auto ts = parse_utc(detail::trim(fields[c_ts]));
        const auto lat = detail::parse_number(fields[c_lat]);
        const auto lon = detail::parse_number(fields[c_lon]);
        const std::string id{detail::trim(fields[c_id])};
        if (id.empty() || !ts || !lat || !lon) {
            out.errors.push_back({line_no, "unparseable field"});
            continue;
        }
        const GeoPoint p{*lat, normalize_lon(*lon)};
        if (!valid_coordinates(p)) {
            out.errors.push_back({line_no, "coordinate out of range"});
            continue;
        }
        rows.push_back({VesselPing{id, *ts, p, std::nullopt}, line_no});
    }

    std::stable_sort(rows.begin(), rows.end(), [](const Raw& a, const Raw& b) {
        if (a.ping.vessel_id != b.ping.vessel_id) return a.ping.vessel_id < b.ping.vessel_id;
        return a.ping.timestamp < b.ping.timestamp;
    });

    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Raw& r = rows[i];
        if (!out.pings.empty() && out.pings.back().vessel_id == r.ping.vessel_id &&
            out.pings.back().timestamp == r.ping.timestamp) {
            if (out.pings.back().position == r.ping.position) continue;  // exact duplicate
            out.errors.push_back({r.line, "duplicate timestamp for vessel " + r.ping.vessel_id});
            continue;
        }
        out.pings.push_back(r.ping);
        auto& cur = out.pings.back();
        if (out.pings.size() >= 2) {
            const auto& prev = out.pings[out.pings.size() - 2];
            if (prev.vessel_id == cur.vessel_id) cur.speed_kmh = detail::ping_speed_kmh(prev, cur);
        }
    }

    if (data_rows > 0 && out.errors.size() * 2 > data_rows)
        raise(errc::corrupt_input, "more than half of the input records are malformed (" +
                                       std::to_string(out.errors.size()) + " of " +
                                       std::to_string(data_rows) + ")");
    return out;
}

inline ParseResult parse_pings_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(errc::input_not_found, "cannot open input: " + path);
    return parse_pings(in);
}

// Empirical percentile of all derived speeds (the rule the 32 km/h default
// was derived from).
inline double compute_speed_threshold(std::span<const VesselPing> pings, double percentile) {
    std::vector<double> speeds;
    for (const auto& p : pings)
        if (p.speed_kmh) speeds.push_back(*p.speed_kmh);
    if (speeds.empty()) raise(errc::empty_sample, "no derivable speeds in input");
    return percentile_linear(std::move(speeds), percentile);
}

struct CleanResult {
    std::vector<VesselPing> pings;
    CleanReport report;
};

// Applies the cleaning rules in order: window/bbox, speed, shore, mobility.
// Every removal is attributed to exactly one rule. Speeds are recomputed
// against the previous *kept* ping, so one spoofed jump removes one ping and
// cleaning is idempotent.
inline CleanResult clean(std::vector<VesselPing> pings, const CleanConfig& config) {
    config.validate();
    CleanResult res;
    res.report.input_count = pings.size();

    double cutoff;
    if (config.speed_cutoff_kmh) {
        cutoff = *config.speed_cutoff_kmh;
    } else {
        cutoff = compute_speed_threshold(pings, config.speed_percentile);
        res.report.warnings.push_back("speed cutoff derived from percentile: " + format_double(cutoff) +
                                      " km/h");
    }
    res.report.speed_cutoff_kmh = cutoff;
    if (config.shore.empty())
        res.report.warnings.push_back("no shore polygons configured; shore rule skipped");

    std::vector<VesselPing> kept;
    kept.reserve(pings.size());
    const VesselPing* prev_kept = nullptr;  // last kept ping of the current vessel
    for (auto& ping : pings) {
        if (prev_kept && prev_kept->vessel_id != ping.vessel_id) prev_kept = nullptr;
        if ((config.time_window &&
             (ping.timestamp < config.time_window->start || ping.timestamp > config.time_window->end)) ||
            (config.bbox && !config.bbox->contains(ping.position))) {
            ++res.report.removed_window;
            continue;
        }
        ping.speed_kmh = prev_kept ? std::optional(detail::ping_speed_kmh(*prev_kept, ping)) : std::nullopt;
        if (ping.speed_kmh && *ping.speed_kmh > cutoff) {
            ++res.report.removed_speed;
            continue;
        }
        if (!config.shore.empty() && config.shore.contains(ping.position)) {
            ++res.report.removed_shore;
            continue;
        }
        kept.push_back(std::move(ping));
        prev_kept = &kept.back();
    }

    // Mobility rule: drop vessels that travel less than min_daily_travel_km on
    // every UTC day they are observed.
    std::size_t i = 0;
    while (i < kept.size()) {
        std::size_t j = i + 1;
        while (j < kept.size() && kept[j].vessel_id == kept[i].vessel_id) ++j;
        bool mobile = false;
        std::int64_t day = utc_day_of(kept[i].timestamp);
        double travel = 0.0;
        for (std::size_t k = i + 1; k < j && !mobile; ++k) {
            const std::int64_t d = utc_day_of(kept[k].timestamp);
            if (d != day) {
                if (travel >= config.min_daily_travel_km) mobile = true;
                day = d;
                travel = 0.0;
            }
            travel += haversine_km(kept[k - 1].position, kept[k].position);
        }
        if (travel >= config.min_daily_travel_km) mobile = true;
        if (mobile) {
            res.pings.insert(res.pings.end(), std::make_move_iterator(kept.begin() + i),
                             std::make_move_iterator(kept.begin() + j));
        } else {
            res.report.removed_mobility += j - i;
            ++res.report.vessels_removed_mobility;
        }
        i = j;
    }
    res.report.survivors = res.pings.size();
    return res;
}

struct InterpolatedRow {
    std::vector<GeoPoint> positions;
    std::vector<std::uint8_t> presence;
};

// Linear interpolation in raw lat/lon between bracketing pings. No
// extrapolation outside [first ping, last ping]; hours strictly inside a gap
// longer than max_gap_hours stay absent. A single-ping vessel is present only
// at the grid hour nearest the ping (ties toward the earlier hour).
inline InterpolatedRow interpolate_hourly(std::span<const VesselPing> pings,
                                          std::span<const std::int64_t> hours, int max_gap_hours) {
    InterpolatedRow row;
    row.positions.resize(hours.size());
    row.presence.assign(hours.size(), 0);
    if (pings.empty() || hours.empty()) return row;

    if (pings.size() == 1) {
        const std::int64_t t = pings[0].timestamp;
        std::size_t best = 0;
        for (std::size_t i = 1; i < hours.size(); ++i) {
            const std::int64_t d_best = std::abs(hours[best] - t);
            const std::int64_t d_i = std::abs(hours[i] - t);
            if (d_i < d_best) best = i;
        }
        row.positions[best] = pings[0].position;
        row.presence[best] = 1;
        return row;
    }

    const std::int64_t max_gap = static_cast<std::int64_t>(max_gap_hours) * kSecondsPerHour;
    std::size_t next = 0;  // first ping with timestamp >= hour
    for (std::size_t i = 0; i < hours.size(); ++i) {
        const std::int64_t h = hours[i];
        while (next < pings.size() && pings[next].timestamp < h) ++next;
        if (next == 0) {
            if (pings[0].timestamp == h) {
                row.positions[i] = pings[0].position;
                row.presence[i] = 1;
            }
            continue;  // before first ping
        }
        if (next == pings.size()) break;  // after last ping
        const VesselPing& a = pings[next - 1];
        const VesselPing& b = pings[next];
        if (b.timestamp == h) {
            row.positions[i] = b.position;
            row.presence[i] = 1;
            continue;
        }
        if (b.timestamp - a.timestamp > max_gap) continue;
        const double w = static_cast<double>(h - a.timestamp) / static_cast<double>(b.timestamp - a.timestamp);
        row.positions[i] = GeoPoint{a.position.lat + w * (b.position.lat - a.position.lat),
                                    a.position.lon + w * (b.position.lon - a.position.lon)};
        row.presence[i] = 1;
    }
    return row;
}

// Builds the balanced N x T panel from cleaned pings. Vessel order is
// first-appearance order (earliest ping, ties by id); the hour grid covers the
// configured time window, or the span of the data when none is set.
inline Panel build_panel(std::span<const VesselPing> cleaned, const CleanConfig& config) {
    config.validate();
    if (cleaned.empty()) raise(errc::empty_panel, "no vessels survive cleaning");

    std::int64_t t_min, t_max;
    if (config.time_window) {
        t_min = config.time_window->start;
        t_max = config.time_window->end;
    } else {
        t_min = cleaned.front().timestamp;
        t_max = cleaned.front().timestamp;
        for (const auto& p : cleaned) {
            t_min = std::min(t_min, p.timestamp);
            t_max = std::max(t_max, p.timestamp);
        }
    }
    const std::int64_t first_hour = ceil_to_hour(t_min);
    const std::int64_t last_hour = floor_to_hour(t_max);
    if (last_hour < first_hour)
        raise(errc::empty_panel, "time range contains no whole hourly instant");
    std::vector<std::int64_t> hours;
    hours.reserve(static_cast<std::size_t>((last_hour - first_hour) / kSecondsPerHour) + 1);
    for (std::int64_t h = first_hour; h <= last_hour; h += kSecondsPerHour) hours.push_back(h);

    struct Span {
        std::string_view id;
        std::size_t begin, end;
        std::int64_t first_ts;
    };
    std::vector<Span> spans;
    std::size_t i = 0;
    while (i < cleaned.size()) {
        std::size_t j = i + 1;
        while (j < cleaned.size() && cleaned[j].vessel_id == cleaned[i].vessel_id) ++j;
        spans.push_back({cleaned[i].vessel_id, i, j, cleaned[i].timestamp});
        i = j;
    }
    std::stable_sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
        if (a.first_ts != b.first_ts) return a.first_ts < b.first_ts;
        return a.id < b.id;
    });

    std::vector<std::string> ids;
    ids.reserve(spans.size());
    for (const auto& s : spans) ids.emplace_back(s.id);
    Panel panel(std::move(ids), std::move(hours));
    for (std::size_t v = 0; v < spans.size(); ++v) {
        const auto row = interpolate_hourly(cleaned.subspan(spans[v].begin, spans[v].end - spans[v].begin),
                                            panel.hours(), config.max_gap_hours);
        for (std::size_t t = 0; t < panel.hour_count(); ++t)
            if (row.presence[t]) panel.set_cell(v, t, row.positions[t], true);
    }
    return panel;
}

// --- config (de)serialization -------------------------------------------------

inline CleanConfig clean_config_from_json(const nlohmann::json& j) {
    CleanConfig c;
    try {
        if (j.contains("speed_cutoff_kmh")) {
            if (j["speed_cutoff_kmh"].is_null())
                c.speed_cutoff_kmh.reset();  // null requests the percentile rule
            else
                c.speed_cutoff_kmh = j["speed_cutoff_kmh"].get<double>();
        }
        c.speed_percentile = j.value("speed_percentile", c.speed_percentile);
        c.min_daily_travel_km = j.value("min_daily_travel_km", c.min_daily_travel_km);
        c.max_gap_hours = j.value("max_gap_hours", c.max_gap_hours);
        if (j.contains("bbox")) {
            const auto& b = j["bbox"];
            c.bbox = BoundingBox{b.at("lat_min").get<double>(), b.at("lat_max").get<double>(),
                                 b.at("lon_min").get<double>(), b.at("lon_max").get<double>()};
        }
        if (j.contains("time_window")) {
            const auto& w = j["time_window"];
            c.time_window = TimeWindow{parse_utc_or_throw(w.at("start").get<std::string>()),
                                       parse_utc_or_throw(w.at("end").get<std::string>())};
        }
        c.shore_geojson_path = j.value("shore_geojson", "");
        if (!c.shore_geojson_path.empty()) c.shore = load_shore_geojson(c.shore_geojson_path);
    } catch (const nlohmann::json::exception& e) {
        raise(errc::config_invalid, "clean config malformed: " + std::string(e.what()));
    }
    c.validate();
    return c;
}

inline void write_pings_csv(std::span<const VesselPing> pings, std::ostream& out) {
    out << "mmsi,timestamp,lat,lon\n";
    for (const auto& p : pings)
        out << p.vessel_id << ',' << format_utc(p.timestamp) << ',' << format_double(p.position.lat)
            << ',' << format_double(p.position.lon) << '\n';
}

}  // namespace fleet

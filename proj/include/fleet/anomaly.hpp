#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleet/density.hpp"
#include "fleet/error.hpp"
#include "fleet/parallel.hpp"
#include "fleet/stats.hpp"
#include "fleet/time.hpp"

namespace fleet {

// Exact two-sample Kolmogorov-Smirnov statistic on sorted samples: the
// supremum of |ECDF_a - ECDF_b|, attained just after a jump point, so scanning
// the merged distinct values and comparing counts is exact.
inline double ks_from_sorted(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) raise(errc::empty_sample, "KS statistic of an empty sample");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double sup = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        const double d = std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb);
        if (d > sup) sup = d;
    }
    return sup;
}

inline double ks_statistic(const DistanceSample& a, const DistanceSample& b) {
    std::vector<double> sa = a.distances, sb = b.distances;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    return ks_from_sorted(sa, sb);
}

// The KS statistics comparing hour t's distance distribution with each of the
// preceding L hourly timesteps. Lags that reach before the panel or hit an
// invalid timestep are masked out; early hours carry partial sets.
struct KsLagSet {
    std::int64_t time_index = 0;
    int lag_hours = 0;
    std::vector<double> ks_values;        // length lag_hours, entry k-1 is lag k
    std::vector<std::uint8_t> valid_mask;  // false where the lag is unavailable

    std::size_t valid_count() const {
        std::size_t n = 0;
        for (const auto m : valid_mask) n += m;
        return n;
    }
};

inline KsLagSet lagged_ks_set(const SampleStore& store, std::size_t t, int lag_hours) {
    if (lag_hours < 1) raise(errc::config_invalid, "lag must be >= 1 hour");
    KsLagSet set;
    set.time_index = static_cast<std::int64_t>(t);
    set.lag_hours = lag_hours;
    set.ks_values.assign(static_cast<std::size_t>(lag_hours), 0.0);
    set.valid_mask.assign(static_cast<std::size_t>(lag_hours), 0);
    if (!store.valid(t)) return set;  // undefined timestep: all lags masked
    const auto& current = store.by_hour[t]->distances;
    for (int k = 1; k <= lag_hours; ++k) {
        if (static_cast<std::size_t>(k) > t) break;
        const std::size_t lagged = t - static_cast<std::size_t>(k);
        if (!store.valid(lagged)) continue;
        set.ks_values[static_cast<std::size_t>(k - 1)] =
            ks_from_sorted(current, store.by_hour[lagged]->distances);
        set.valid_mask[static_cast<std::size_t>(k - 1)] = 1;
    }
    return set;
}

namespace detail {
inline std::vector<double> valid_values(const KsLagSet& set) {
    std::vector<double> v;
    v.reserve(set.ks_values.size());
    for (std::size_t k = 0; k < set.ks_values.size(); ++k)
        if (set.valid_mask[k]) v.push_back(set.ks_values[k]);
    return v;
}
}  // namespace detail

// Arithmetic mean over the valid lags; absent when no lag is valid.
inline std::optional<double> mean_index(const KsLagSet& set) {
    const auto v = detail::valid_values(set);
    if (v.empty()) return std::nullopt;
    return mean_of(v);
}

// Pearson kurtosis m4/m2^2 (population moments) over the valid lags; absent
// below 4 valid lags or at zero variance — degenerate sets are signaled,
// never reported as a value.
inline std::optional<double> kurtosis_index(const KsLagSet& set) {
    const auto v = detail::valid_values(set);
    if (v.size() < 4) return std::nullopt;
    const CentralMoments mom = central_moments(v);
    if (!(mom.m2 > 0.0)) return std::nullopt;
    return mom.m4 / (mom.m2 * mom.m2);
}

enum class IndexKind { mean, kurtosis };

inline const char* to_string(IndexKind k) { return k == IndexKind::mean ? "mean" : "kurtosis"; }

inline IndexKind index_kind_from_string(const std::string& s) {
    if (s == "mean") return IndexKind::mean;
    if (s == "kurtosis") return IndexKind::kurtosis;
    raise(errc::config_invalid, "unknown index kind: \"" + s + "\" (expected mean or kurtosis)");
}

// Per-hour anomaly index values with significance flags. flags[t] is only set
// by flag_anomalies; until then threshold is absent and all flags are false.
struct AnomalySeries {
    IndexKind kind = IndexKind::mean;
    std::vector<std::optional<double>> values;  // one slot per panel hour
    std::optional<double> threshold;
    std::vector<std::uint8_t> flags;

    std::size_t flag_count() const {
        std::size_t n = 0;
        for (const auto f : flags) n += f;
        return n;
    }
};

inline AnomalySeries anomaly_series(const SampleStore& store, int lag_hours, IndexKind kind,
                                    unsigned threads = 1) {
    if (lag_hours < 1) raise(errc::config_invalid, "lag must be >= 1 hour");
    const std::size_t t_count = store.size();
    if (t_count <= static_cast<std::size_t>(lag_hours))
        raise(errc::window_too_short, "panel of " + std::to_string(t_count) +
                                          " hours cannot support a lag of " + std::to_string(lag_hours));
    AnomalySeries series;
    series.kind = kind;
    series.values.resize(t_count);
    series.flags.assign(t_count, 0);
    parallel_for(t_count, threads, [&](std::size_t t) {
        if (t == 0) return;
        const KsLagSet set = lagged_ks_set(store, t, lag_hours);
        series.values[t] = kind == IndexKind::mean ? mean_index(set) : kurtosis_index(set);
    });
    return series;
}

// Inclusive hour-index window [start, end].
struct HourWindow {
    std::int64_t start = 0;
    std::int64_t end = 0;

    void validate() const {
        if (start < 0 || end < start) raise(errc::config_invalid, "window must satisfy 0 <= start <= end");
    }
    bool contains(std::int64_t t) const { return t >= start && t <= end; }
};

inline void ensure_windows_disjoint(std::span<const HourWindow> null_windows,
                                    std::span<const HourWindow> event_windows) {
    for (const auto& n : null_windows)
        for (const auto& e : event_windows)
            if (n.start <= e.end && e.start <= n.end)
                raise(errc::config_invalid,
                      "null window [" + std::to_string(n.start) + ", " + std::to_string(n.end) +
                          "] overlaps event window [" + std::to_string(e.start) + ", " +
                          std::to_string(e.end) + "]");
}

struct NullCalibration {
    std::vector<HourWindow> null_windows;
    double percentile = 0.99;
    double threshold = 0.0;
    std::size_t sample_count = 0;
    bool low_sample_warning = false;  // fewer than 100 null values
};

// Threshold = empirical percentile (same linear-interpolation definition as
// the ingest speed rule) of the index values inside the null windows.
inline NullCalibration calibrate_null(const AnomalySeries& series,
                                      std::span<const HourWindow> null_windows, double percentile) {
    if (!(percentile > 0.0 && percentile < 1.0))
        raise(errc::config_invalid, "percentile must lie in (0, 1)");
    if (null_windows.empty()) raise(errc::config_invalid, "at least one null window is required");
    std::vector<double> values;
    for (const auto& w : null_windows) {
        w.validate();
        const auto hi = std::min<std::int64_t>(w.end, static_cast<std::int64_t>(series.values.size()) - 1);
        for (std::int64_t t = w.start; t <= hi; ++t)
            if (series.values[static_cast<std::size_t>(t)])
                values.push_back(*series.values[static_cast<std::size_t>(t)]);
    }
    if (values.empty()) raise(errc::empty_sample, "null windows contain no defined index values");
    NullCalibration cal;
    cal.null_windows.assign(null_windows.begin(), null_windows.end());
    cal.percentile = percentile;
    cal.sample_count = values.size();
    cal.low_sample_warning = values.size() < 100;
    cal.threshold = percentile_linear(std::move(values), percentile);
    return cal;
}

// Strict inequality: a value exactly at the threshold is not flagged.
inline AnomalySeries flag_anomalies(AnomalySeries series, const NullCalibration& calibration) {
    series.threshold = calibration.threshold;
    series.flags.assign(series.values.size(), 0);
    for (std::size_t t = 0; t < series.values.size(); ++t)
        if (series.values[t] && *series.values[t] > calibration.threshold) series.flags[t] = 1;
    return series;
}

// Time-by-lag KS matrix (Fig. 3-style data product). Row t, column k-1 holds
// ks(sample_t, sample_{t-k}); NaN marks undefined cells.
struct KsHeatmap {
    int max_lag = 0;
    std::vector<std::vector<double>> rows;  // rows.size() == hour count

    bool defined(std::size_t t, int k) const {
        return !std::isnan(rows[t][static_cast<std::size_t>(k - 1)]);
    }
};

inline KsHeatmap ks_heatmap(const SampleStore& store, int max_lag, unsigned threads = 1) {
    if (max_lag < 1) raise(errc::config_invalid, "lag must be >= 1 hour");
    if (store.size() < 2) raise(errc::window_too_short, "heatmap needs at least 2 hours");
    KsHeatmap map;
    map.max_lag = max_lag;
    map.rows.resize(store.size());
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    parallel_for(store.size(), threads, [&](std::size_t t) {
        auto& row = map.rows[t];
        row.assign(static_cast<std::size_t>(max_lag), nan);
        if (t == 0) return;
        const KsLagSet set = lagged_ks_set(store, t, max_lag);
        for (std::size_t k = 0; k < set.ks_values.size(); ++k)
            if (set.valid_mask[k]) row[k] = set.ks_values[k];
    });
    return map;
}

// Derives an index series from an already-computed heatmap; numerically
// identical to anomaly_series because the cells are the same KS values.
inline AnomalySeries series_from_heatmap(const KsHeatmap& map, IndexKind kind) {
    AnomalySeries series;
    series.kind = kind;
    series.values.resize(map.rows.size());
    series.flags.assign(map.rows.size(), 0);
    for (std::size_t t = 1; t < map.rows.size(); ++t) {
        KsLagSet set;
        set.time_index = static_cast<std::int64_t>(t);
        set.lag_hours = map.max_lag;
        set.ks_values.assign(map.rows[t].size(), 0.0);
        set.valid_mask.assign(map.rows[t].size(), 0);
        for (std::size_t k = 0; k < map.rows[t].size(); ++k) {
            if (!std::isnan(map.rows[t][k])) {
                set.ks_values[k] = map.rows[t][k];
                set.valid_mask[k] = 1;
            }
        }
        series.values[t] = kind == IndexKind::mean ? mean_index(set) : kurtosis_index(set);
    }
    return series;
}

// --- exports -------------------------------------------------------------------

inline void write_series_csv(const AnomalySeries& series, std::span<const std::int64_t> hours,
                             std::ostream& out) {
    out << "hour,value,flag,threshold\n";
    const std::string threshold = series.threshold ? format_double(*series.threshold) : std::string();
    for (std::size_t t = 0; t < series.values.size(); ++t) {
        out << format_utc(hours[t]) << ',';
        if (series.values[t]) out << format_double(*series.values[t]);
        out << ',' << (series.flags[t] ? 1 : 0) << ',' << threshold << '\n';
    }
}

inline nlohmann::json series_to_json(const AnomalySeries& series, std::span<const std::int64_t> hours) {
    nlohmann::json values = nlohmann::json::array();
    nlohmann::json flags = nlohmann::json::array();
    nlohmann::json hrs = nlohmann::json::array();
    for (std::size_t t = 0; t < series.values.size(); ++t) {
        hrs.push_back(format_utc(hours[t]));
        if (series.values[t])
            values.push_back(*series.values[t]);
        else
            values.push_back(nullptr);
        flags.push_back(series.flags[t] ? 1 : 0);
    }
    nlohmann::json j{{"schema", "fleet-anomaly-series/1"},
                     {"kind", to_string(series.kind)},
                     {"hours", std::move(hrs)},
                     {"values", std::move(values)},
                     {"flags", std::move(flags)}};
    if (series.threshold)
        j["threshold"] = *series.threshold;
    else
        j["threshold"] = nullptr;
    return j;
}

inline void write_heatmap_csv(const KsHeatmap& map, std::span<const std::int64_t> hours,
                              std::ostream& out) {
    out << "hour";
    for (int k = 1; k <= map.max_lag; ++k) out << ",lag_" << k;
    out << '\n';
    for (std::size_t t = 0; t < map.rows.size(); ++t) {
        out << format_utc(hours[t]);
        for (const double v : map.rows[t]) {
            out << ',';
            if (!std::isnan(v)) out << format_double(v);
        }
        out << '\n';
    }
}

inline nlohmann::json calibration_to_json(const NullCalibration& cal, IndexKind kind) {
    nlohmann::json windows = nlohmann::json::array();
    for (const auto& w : cal.null_windows)
        windows.push_back({{"start_hour", w.start}, {"end_hour", w.end}});
    return nlohmann::json{{"schema", "fleet-calibration/1"},
                          {"kind", to_string(kind)},
                          {"percentile", cal.percentile},
                          {"threshold", cal.threshold},
                          {"sample_count", cal.sample_count},
                          {"low_sample_warning", cal.low_sample_warning},
                          {"null_windows", std::move(windows)}};
}

}  // namespace fleet

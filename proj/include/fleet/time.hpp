#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "fleet/error.hpp"

namespace fleet {

inline constexpr std::int64_t kSecondsPerHour = 3600;
inline constexpr std::int64_t kSecondsPerDay = 86400;

// Days since 1970-01-01 in the proleptic Gregorian calendar
// (Howard Hinnant's civil-days algorithm).
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct UtcParts {
    std::int64_t year = 1970;
    unsigned month = 1, day = 1, hour = 0, minute = 0, second = 0;
};

constexpr UtcParts civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return UtcParts{y + (m <= 2), m, d, 0, 0, 0};
}

constexpr bool is_leap_year(std::int64_t y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

constexpr unsigned days_in_month(std::int64_t y, unsigned m) {
    constexpr unsigned lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap_year(y)) return 29;
    return m >= 1 && m <= 12 ? lengths[m - 1] : 0;
}

// Parses "YYYY-MM-DD[T ]HH:MM:SS[.frac][Z]" as a UTC instant in unix seconds.
// Fractional seconds are truncated. Returns nullopt on malformed input.
inline std::optional<std::int64_t> parse_utc(std::string_view s) {
    auto digits = [&](std::size_t pos, std::size_t n, std::int64_t& out) -> bool {
        if (pos + n > s.size()) return false;
        out = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const char c = s[pos + i];
            if (c < '0' || c > '9') return false;
            out = out * 10 + (c - '0');
        }
        return true;
    };
    std::int64_t y, mo, d, h, mi, sec;
    if (s.size() < 19) return std::nullopt;
    if (!digits(0, 4, y) || s[4] != '-' || !digits(5, 2, mo) || s[7] != '-' || !digits(8, 2, d))
        return std::nullopt;
    if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
    if (!digits(11, 2, h) || s[13] != ':' || !digits(14, 2, mi) || s[16] != ':' || !digits(17, 2, sec))
        return std::nullopt;
    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        std::size_t nfrac = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos, ++nfrac;
        if (nfrac == 0) return std::nullopt;
    }
    if (pos < s.size() && s[pos] == 'Z') ++pos;
    if (pos != s.size()) return std::nullopt;
    if (mo < 1 || mo > 12 || d < 1 || d > days_in_month(y, static_cast<unsigned>(mo)))
        return std::nullopt;
    if (h > 23 || mi > 59 || sec > 59) return std::nullopt;
    return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * kSecondsPerDay +
           h * 3600 + mi * 60 + sec;
}

inline std::int64_t parse_utc_or_throw(std::string_view s, errc code = errc::config_invalid) {
    const auto t = parse_utc(s);
    if (!t) raise(code, "malformed UTC timestamp: \"" + std::string(s) + "\"");
    return *t;
}

inline std::string format_utc(std::int64_t t) {
    std::int64_t days = t / kSecondsPerDay;
    std::int64_t rem = t % kSecondsPerDay;
    if (rem < 0) {
        rem += kSecondsPerDay;
        --days;
    }
    const UtcParts p = civil_from_days(days);
    char buf[24];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(p.year), p.month, p.day,
                  static_cast<long long>(rem / 3600), static_cast<long long>(rem / 60 % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

constexpr std::int64_t floor_to_hour(std::int64_t t) { return floor_div(t, kSecondsPerHour) * kSecondsPerHour; }
constexpr std::int64_t ceil_to_hour(std::int64_t t) { return -floor_to_hour(-t); }
constexpr std::int64_t utc_day_of(std::int64_t t) { return floor_div(t, kSecondsPerDay); }

}  // namespace fleet

#pragma once

#include <charconv>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace tweetstock {

/// Calendar date (UTC). Comparison is chronological.
struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    auto operator<=>(const Date&) const = default;

    std::string to_string() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
        return buf;
    }
};

inline bool is_leap_year(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

inline int days_in_month(int year, int month) {
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month < 1 || month > 12) return 0;
    if (month == 2 && is_leap_year(year)) return 29;
    return kDays[month - 1];
}

inline bool valid_date(const Date& d) {
    return d.year >= 1 && d.month >= 1 && d.month <= 12 && d.day >= 1 &&
           d.day <= days_in_month(d.year, d.month);
}

namespace detail {

inline bool parse_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

inline bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

} // namespace detail

/// Parses `YYYY-MM-DD` or `DD/MM/YYYY HH:MM`; any time-of-day part is
/// discarded. Returns nullopt for anything else or for impossible dates.
inline std::optional<Date> parse_date(std::string_view s) {
    // Trim surrounding whitespace.
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);

    Date d;
    if (s.size() >= 10 && s[4] == '-' && s[7] == '-') {
        if (s.size() > 10 && s[10] != ' ' && s[10] != 'T') return std::nullopt;
        if (!detail::all_digits(s.substr(0, 4)) || !detail::all_digits(s.substr(5, 2)) ||
            !detail::all_digits(s.substr(8, 2)))
            return std::nullopt;
        detail::parse_int(s.substr(0, 4), d.year);
        detail::parse_int(s.substr(5, 2), d.month);
        detail::parse_int(s.substr(8, 2), d.day);
    } else if (s.size() >= 10 && s[2] == '/' && s[5] == '/') {
        if (s.size() > 10 && s[10] != ' ') return std::nullopt;
        if (!detail::all_digits(s.substr(0, 2)) || !detail::all_digits(s.substr(3, 2)) ||
            !detail::all_digits(s.substr(6, 4)))
            return std::nullopt;
        detail::parse_int(s.substr(0, 2), d.day);
        detail::parse_int(s.substr(3, 2), d.month);
        detail::parse_int(s.substr(6, 4), d.year);
    } else {
        return std::nullopt;
    }
    if (!valid_date(d)) return std::nullopt;
    return d;
}

} // namespace tweetstock

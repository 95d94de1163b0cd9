#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tweetstock/csv.hpp"
#include "tweetstock/date.hpp"
#include "tweetstock/error.hpp"

namespace tweetstock {

struct Tweet {
    Date date;
    std::string text;
    long retweet_count = 0;
};

struct PriceBar {
    Date date;
    double close = 0.0;
};

/// Binary next-`delay`-trading-day direction for one dated bar.
/// value = 1 when the close `delay` bars ahead is strictly higher, else 0.
struct DirectionLabel {
    Date date;
    int delay = 1;
    int value = 0;
};

/// Column names used to read a tweet CSV. An empty retweets name means the
/// corpus carries no retweet counts; all tweets then get a count of zero.
struct TweetColumns {
    std::string date = "date";
    std::string text = "text";
    std::string retweets = "retweets";
};

struct TweetLoad {
    std::vector<Tweet> tweets;
    std::size_t skipped_rows = 0; // rows dropped for unparseable date/retweets
};

namespace detail {

inline bool parse_long(std::string_view s, long& out) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

inline bool parse_double(std::string_view s, double& out) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

} // namespace detail

/// Loads a tweet CSV. One Tweet per non-empty data row; rows whose date or
/// retweet count fails to parse are counted in `skipped_rows` and dropped.
inline TweetLoad load_tweets(const std::filesystem::path& path, const TweetColumns& cols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open tweet file: " + path.string());

    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields)) throw DataError("tweet file is empty: " + path.string());

    ColumnIndex index(fields);
    const size_t date_col = index.require(cols.date);
    const size_t text_col = index.require(cols.text);
    const bool has_retweets = !cols.retweets.empty();
    const size_t rt_col = has_retweets ? index.require(cols.retweets) : 0;

    TweetLoad out;
    while (reader.next(fields)) {
        if (blank_row(fields)) continue;
        const size_t needed = std::max({date_col, text_col, has_retweets ? rt_col : 0});
        if (fields.size() <= needed) {
            ++out.skipped_rows;
            continue;
        }
        auto date = parse_date(fields[date_col]);
        if (!date) {
            ++out.skipped_rows;
            continue;
        }
        long retweets = 0;
        if (has_retweets && !fields[rt_col].empty()) {
            if (!detail::parse_long(fields[rt_col], retweets) || retweets < 0) {
                ++out.skipped_rows;
                continue;
            }
        }
        out.tweets.push_back(Tweet{*date, fields[text_col], retweets});
    }
    if (out.tweets.empty())
        throw DataError("no parseable tweet rows in " + path.string());
    return out;
}

/// Loads a price CSV with `date` and `close` columns (extra columns are
/// ignored). Bars are returned sorted ascending by date.
inline std::vector<PriceBar> load_prices(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open price file: " + path.string());

    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields)) throw DataError("price file is empty: " + path.string());

    ColumnIndex index(fields);
    const size_t date_col = index.require("date");
    const size_t close_col = index.require("close");

    std::vector<PriceBar> bars;
    size_t line = 1;
    while (reader.next(fields)) {
        ++line;
        if (blank_row(fields)) continue;
        if (fields.size() <= std::max(date_col, close_col))
            throw DataError("price row " + std::to_string(line) + " has too few fields");
        auto date = parse_date(fields[date_col]);
        if (!date)
            throw DataError("unparseable date in price row " + std::to_string(line) +
                            ": '" + fields[date_col] + "'");
        double close = 0.0;
        if (!detail::parse_double(fields[close_col], close))
            throw DataError("unparseable close in price row " + std::to_string(line) +
                            ": '" + fields[close_col] + "'");
        if (close <= 0.0)
            throw DataError("non-positive close " + fields[close_col] + " on " +
                            date->to_string());
        bars.push_back(PriceBar{*date, close});
    }

    std::sort(bars.begin(), bars.end(),
              [](const PriceBar& a, const PriceBar& b) { return a.date < b.date; });
    for (size_t i = 1; i < bars.size(); ++i)
        if (bars[i].date == bars[i - 1].date)
            throw DataError("duplicate price date " + bars[i].date.to_string());
    return bars;
}

/// Labels each bar by the direction of the close `delay` trading days ahead:
/// 1 if strictly higher, 0 for no change or a decrease. The last `delay`
/// bars produce no label.
inline std::vector<DirectionLabel> label_directions(const std::vector<PriceBar>& bars,
                                                    int delay) {
    if (delay < 1 || delay > 7)
        throw DataError("delay must be in [1,7], got " + std::to_string(delay));
    if (bars.size() < static_cast<size_t>(delay) + 1)
        throw DataError("need at least delay+1 price bars, got " +
                        std::to_string(bars.size()));
    for (size_t i = 1; i < bars.size(); ++i)
        if (!(bars[i - 1].date < bars[i].date))
            throw DataError("price bars must be strictly ascending by date");

    std::vector<DirectionLabel> labels;
    labels.reserve(bars.size() - delay);
    for (size_t t = 0; t + delay < bars.size(); ++t) {
        const int up = bars[t + delay].close > bars[t].close ? 1 : 0;
        labels.push_back(DirectionLabel{bars[t].date, delay, up});
    }
    return labels;
}

} // namespace tweetstock

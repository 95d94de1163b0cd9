#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tweetstock/error.hpp"
#include "tweetstock/ingest.hpp"
#include "tweetstock/sentiment.hpp"

namespace tweetstock {

struct CorrelationReport {
    int delay = 0;
    double r_pb = 0.0;
    std::size_t n = 0;
    AggregateMode mode = AggregateMode::simple;
    bool available = false;
    std::string warning;
};

/// Correlation between a continuous sample and a 0/1 sample, computed from
/// class means and the population standard deviation so it coincides with
/// the Pearson coefficient of the same pairs.
inline double point_biserial(std::span<const double> x, std::span<const int> y) {
    if (x.size() != y.size())
        throw DataError("point-biserial inputs differ in length: " + std::to_string(x.size()) +
                        " vs " + std::to_string(y.size()));
    const std::size_t n = x.size();
    if (n < 2) throw DataError("point-biserial needs at least 2 pairs");

    double sum = 0.0;
    std::size_t n1 = 0;
    double sum1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] != 0 && y[i] != 1)
            throw DataError("point-biserial labels must be 0 or 1, got " + std::to_string(y[i]));
        sum += x[i];
        if (y[i] == 1) {
            ++n1;
            sum1 += x[i];
        }
    }
    const std::size_t n0 = n - n1;
    if (n0 == 0 || n1 == 0) throw DataError("point-biserial needs both label classes");

    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (sd == 0.0) throw DataError("point-biserial needs non-constant values");

    const double m1 = sum1 / static_cast<double>(n1);
    const double m0 = (sum - sum1) / static_cast<double>(n0);
    const double p = static_cast<double>(n1) / static_cast<double>(n);
    const double q = static_cast<double>(n0) / static_cast<double>(n);
    return (m1 - m0) / sd * std::sqrt(p * q);
}

/// Pairs each day's sentiment with the price-direction label at each delay
/// and reports one coefficient per delay, ordered by delay. Days without a
/// label at some delay drop out of that delay's sample; a delay whose
/// sample is too small, single-class, or constant is flagged unavailable
/// instead of failing the sweep.
inline std::vector<CorrelationReport> delay_sweep(const std::vector<DailySentiment>& daily,
                                                  const std::vector<PriceBar>& bars,
                                                  const std::vector<int>& delays,
                                                  AggregateMode mode) {
    std::vector<CorrelationReport> reports;
    reports.reserve(delays.size());
    for (int delay : delays) {
        CorrelationReport report;
        report.delay = delay;
        report.mode = mode;
        try {
            const std::vector<DirectionLabel> labels = label_directions(bars, delay);
            std::map<Date, int> by_date;
            for (const DirectionLabel& l : labels) by_date.emplace(l.date, l.value);

            std::vector<double> x;
            std::vector<int> y;
            for (const DailySentiment& day : daily) {
                auto it = by_date.find(day.date);
                if (it == by_date.end()) continue;
                x.push_back(sentiment_value(day, mode));
                y.push_back(it->second);
            }
            report.n = x.size();
            report.r_pb = point_biserial(x, y);
            report.available = true;
        } catch (const DataError& e) {
            report.available = false;
            report.warning = e.what();
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

struct DistributionSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;              // population
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};

/// Population moments of a sample, for eyeballing normality.
inline DistributionSummary distribution_summary(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) throw DataError("distribution summary needs at least 2 values");

    DistributionSummary s;
    s.n = n;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(n);

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double d = v - s.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    if (m2 == 0.0) throw DataError("distribution summary needs non-constant values");

    s.sd = std::sqrt(m2);
    s.skewness = m3 / (s.sd * s.sd * s.sd);
    s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    return s;
}

/// Report JSON: array of {delay, r_pb, n, mode} with a warning field in
/// place of r_pb for unavailable delays.
inline nlohmann::ordered_json correlation_report_json(const std::vector<CorrelationReport>& reports) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const CorrelationReport& r : reports) {
        nlohmann::ordered_json row;
        row["delay"] = r.delay;
        if (r.available) row["r_pb"] = r.r_pb;
        row["n"] = r.n;
        row["mode"] = aggregate_mode_name(r.mode);
        if (!r.available) row["warning"] = r.warning;
        arr.push_back(std::move(row));
    }
    return arr;
}

/// Writes `bin_start,bin_end,count` rows.
inline void save_histogram_csv(const std::filesystem::path& path, const Histogram& h) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write histogram file: " + path.string());
    out << "bin_start,bin_end,count\n";
    out.precision(17);
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        out << h.edges[i] << ',' << h.edges[i + 1] << ',' << h.counts[i] << '\n';
}

} // namespace tweetstock

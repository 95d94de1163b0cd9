#include <random>

#include <gtest/gtest.h>

#include "testutil.hpp"
#include "tweetstock/stats.hpp"

namespace ts = tweetstock;
using testutil::TempDir;

TEST(PointBiserial, KnownSmallCase) {
    const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
    const std::vector<int> y = {0, 0, 1, 1};
    EXPECT_DOUBLE_EQ(ts::point_biserial(x, y), 0.8944271909999159);
}

TEST(PointBiserial, PerfectSeparationOfTwoValues) {
    const std::vector<double> x = {-1.0, -1.0, 1.0, 1.0};
    const std::vector<int> y = {0, 0, 1, 1};
    EXPECT_NEAR(ts::point_biserial(x, y), 1.0, 1e-15);
    const std::vector<int> flipped = {1, 1, 0, 0};
    EXPECT_NEAR(ts::point_biserial(x, flipped), -1.0, 1e-15);
}

TEST(PointBiserial, MatchesPearsonOnRandomData) {
    std::mt19937_64 gen(42);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 4 + gen() % 100;
        std::vector<double> x(n);
        std::vector<int> y(n);
        std::vector<double> y_real(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = static_cast<int>(i % 2);
            y_real[i] = y[i];
            x[i] = noise(gen) + 0.5 * y_real[i];
        }
        const double pb = ts::point_biserial(x, y);
        const double pearson = testutil::pearson_reference(x, y_real);
        EXPECT_NEAR(pb, pearson, 1e-12);
        EXPECT_GE(pb, -1.0);
        EXPECT_LE(pb, 1.0);
    }
}

TEST(PointBiserial, ValidatesInputs) {
    const std::vector<double> x = {1.0, 2.0, 3.0};
    EXPECT_THROW(ts::point_biserial(x, std::vector<int>{0, 1}), ts::DataError);
    EXPECT_THROW(ts::point_biserial(std::vector<double>{1.0}, std::vector<int>{1}),
                 ts::DataError);
    EXPECT_THROW(ts::point_biserial(x, std::vector<int>{0, 1, 2}), ts::DataError);
    EXPECT_THROW(ts::point_biserial(x, std::vector<int>{1, 1, 1}), ts::DataError);
    EXPECT_THROW(
        ts::point_biserial(std::vector<double>{2.0, 2.0, 2.0}, std::vector<int>{0, 1, 1}),
        ts::DataError);
}

namespace {

std::vector<ts::PriceBar> fixture_bars() {
    // Closes: 10, 12, 11, 11, 13 over five consecutive trading days.
    return {
        {{2016, 4, 1}, 10.0}, {{2016, 4, 4}, 12.0}, {{2016, 4, 5}, 11.0},
        {{2016, 4, 6}, 11.0}, {{2016, 4, 7}, 13.0},
    };
}

std::vector<ts::DailySentiment> fixture_daily() {
    return {
        {{2016, 4, 1}, 0.6, 0.1, 2},
        {{2016, 4, 4}, -0.4, 0.3, 1},
        {{2016, 4, 5}, 0.2, -0.2, 3},
        {{2016, 4, 6}, -0.1, 0.4, 1},
        {{2016, 4, 8}, 0.9, 0.9, 1}, // no price bar on this date
    };
}

} // namespace

TEST(DelaySweep, PairsByDateAndComputesPerDelay) {
    const auto reports =
        ts::delay_sweep(fixture_daily(), fixture_bars(), {1, 2}, ts::AggregateMode::simple);
    ASSERT_EQ(reports.size(), 2u);

    // Delay 1 labels: 04-01 up, 04-04 down, 04-05 tie->0, 04-06 up.
    EXPECT_EQ(reports[0].delay, 1);
    ASSERT_TRUE(reports[0].available);
    EXPECT_EQ(reports[0].n, 4u);
    {
        const std::vector<double> x = {0.6, -0.4, 0.2, -0.1};
        const std::vector<double> y = {1, 0, 0, 1};
        EXPECT_NEAR(reports[0].r_pb, testutil::pearson_reference(x, y), 1e-12);
    }

    // Delay 2 labels: 04-01 up (10->11), 04-04 down (12->11), 04-05 up (11->13).
    EXPECT_EQ(reports[1].delay, 2);
    ASSERT_TRUE(reports[1].available);
    EXPECT_EQ(reports[1].n, 3u);
    {
        const std::vector<double> x = {0.6, -0.4, 0.2};
        const std::vector<double> y = {1, 0, 1};
        EXPECT_NEAR(reports[1].r_pb, testutil::pearson_reference(x, y), 1e-12);
    }
}

TEST(DelaySweep, UsesTheRequestedAggregate) {
    const auto reports =
        ts::delay_sweep(fixture_daily(), fixture_bars(), {1}, ts::AggregateMode::weighted);
    ASSERT_TRUE(reports[0].available);
    const std::vector<double> x = {0.1, 0.3, -0.2, 0.4};
    const std::vector<double> y = {1, 0, 0, 1};
    EXPECT_NEAR(reports[0].r_pb, testutil::pearson_reference(x, y), 1e-12);
}

TEST(DelaySweep, UnavailableDelayCarriesAWarning) {
    // Delay 4 leaves a single labeled day, too few pairs to correlate.
    const auto reports = ts::delay_sweep(fixture_daily(), fixture_bars(), {1, 4, 7},
                                         ts::AggregateMode::simple);
    ASSERT_EQ(reports.size(), 3u);
    EXPECT_TRUE(reports[0].available);
    EXPECT_FALSE(reports[1].available);
    EXPECT_FALSE(reports[1].warning.empty());
    EXPECT_FALSE(reports[2].available); // not enough bars for delay 7 at all
}

TEST(DelaySweep, PreservesRequestedDelayOrder) {
    const auto reports =
        ts::delay_sweep(fixture_daily(), fixture_bars(), {2, 1}, ts::AggregateMode::simple);
    ASSERT_EQ(reports.size(), 2u);
    EXPECT_EQ(reports[0].delay, 2);
    EXPECT_EQ(reports[1].delay, 1);
}

TEST(DistributionSummary, MatchesHandComputedMoments) {
    const std::vector<double> values = {1.0, 2.0, 3.0, 4.0, 5.0};
    const ts::DistributionSummary s = ts::distribution_summary(values);
    EXPECT_EQ(s.n, 5u);
    EXPECT_DOUBLE_EQ(s.mean, 3.0);
    EXPECT_DOUBLE_EQ(s.sd, std::sqrt(2.0));
    EXPECT_NEAR(s.skewness, 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(s.excess_kurtosis, 6.8 / 4.0 - 3.0);
}

TEST(DistributionSummary, ValidatesInputs) {
    EXPECT_THROW(ts::distribution_summary(std::vector<double>{1.0}), ts::DataError);
    EXPECT_THROW(ts::distribution_summary(std::vector<double>{2.0, 2.0}), ts::DataError);
}

TEST(CorrelationReportJson, EmitsWarningInsteadOfCoefficient) {
    std::vector<ts::CorrelationReport> reports(2);
    reports[0] = {1, 0.25, 40, ts::AggregateMode::simple, true, ""};
    reports[1] = {7, 0.0, 1, ts::AggregateMode::weighted, false, "too few pairs"};
    const auto arr = ts::correlation_report_json(reports);
    ASSERT_EQ(arr.size(), 2u);
    EXPECT_DOUBLE_EQ(arr[0]["r_pb"].get<double>(), 0.25);
    EXPECT_EQ(arr[0]["mode"], "simple");
    EXPECT_FALSE(arr[0].contains("warning"));
    EXPECT_FALSE(arr[1].contains("r_pb"));
    EXPECT_EQ(arr[1]["warning"], "too few pairs");
    EXPECT_EQ(arr[1]["n"], 1);
}

TEST(HistogramCsv, WritesOneRowPerBin) {
    TempDir dir;
    const ts::Histogram h = ts::score_histogram({-1.0, -0.5, 0.0, 0.5, 1.0}, 2);
    const auto path = dir.file("hist.csv");
    ts::save_histogram_csv(path, h);
    const std::string content = testutil::read_file(path);
    EXPECT_EQ(content,
              "bin_start,bin_end,count\n"
              "-1,0,2\n"
              "0,1,3\n");
}

#include <sstream>

#include <gtest/gtest.h>

#include "tweetstock/csv.hpp"
#include "tweetstock/date.hpp"

namespace ts = tweetstock;

TEST(Date, ParsesIsoForm) {
    auto d = ts::parse_date("2016-04-01");
    ASSERT_TRUE(d.has_value());
    EXPECT_EQ(d->year, 2016);
    EXPECT_EQ(d->month, 4);
    EXPECT_EQ(d->day, 1);
}

TEST(Date, ParsesIsoFormWithTimeSuffix) {
    auto d = ts::parse_date("2016-04-01 13:45:00");
    ASSERT_TRUE(d.has_value());
    EXPECT_EQ((ts::Date{2016, 4, 1}), *d);
    EXPECT_EQ(ts::parse_date("2016-04-01T13:45:00")->day, 1);
}

TEST(Date, ParsesDayFirstSlashForm) {
    auto d = ts::parse_date("01/04/2016 13:45");
    ASSERT_TRUE(d.has_value());
    EXPECT_EQ(d->year, 2016);
    EXPECT_EQ(d->month, 4);
    EXPECT_EQ(d->day, 1);
}

TEST(Date, TrimsSurroundingWhitespace) {
    EXPECT_TRUE(ts::parse_date(" 2016-04-01 ").has_value());
    EXPECT_TRUE(ts::parse_date("2016-04-01\r").has_value());
}

TEST(Date, RejectsGarbage) {
    EXPECT_FALSE(ts::parse_date("").has_value());
    EXPECT_FALSE(ts::parse_date("apple").has_value());
    EXPECT_FALSE(ts::parse_date("2016/04/01").has_value());
    EXPECT_FALSE(ts::parse_date("2016-4-1").has_value());
    EXPECT_FALSE(ts::parse_date("2016-04-01x").has_value());
    EXPECT_FALSE(ts::parse_date("2016-13-01").has_value());
    EXPECT_FALSE(ts::parse_date("2016-02-30").has_value());
    EXPECT_FALSE(ts::parse_date("2015-02-29").has_value());
}

TEST(Date, AcceptsLeapDay) {
    EXPECT_TRUE(ts::parse_date("2016-02-29").has_value());
    EXPECT_TRUE(ts::parse_date("2000-02-29").has_value());
    EXPECT_FALSE(ts::parse_date("1900-02-29").has_value());
}

TEST(Date, OrdersChronologically) {
    ts::Date a{2016, 3, 31}, b{2016, 4, 1}, c{2017, 1, 1};
    EXPECT_LT(a, b);
    EXPECT_LT(b, c);
    EXPECT_EQ(a, (ts::Date{2016, 3, 31}));
}

TEST(Date, RoundTripsThroughString) {
    ts::Date d{2016, 4, 1};
    EXPECT_EQ(d.to_string(), "2016-04-01");
    EXPECT_EQ(*ts::parse_date(d.to_string()), d);
}

TEST(Csv, SplitsPlainRows) {
    std::istringstream in("a,b,c\n1,2,3\n");
    ts::CsvReader reader(in);
    std::vector<std::string> fields;
    ASSERT_TRUE(reader.next(fields));
    EXPECT_EQ(fields, (std::vector<std::string>{"a", "b", "c"}));
    ASSERT_TRUE(reader.next(fields));
    EXPECT_EQ(fields, (std::vector<std::string>{"1", "2", "3"}));
    EXPECT_FALSE(reader.next(fields));
}

TEST(Csv, HandlesQuotedCommasAndNewlines) {
    std::istringstream in("\"hello, world\",\"two\nlines\",plain\n");
    ts::CsvReader reader(in);
    std::vector<std::string> fields;
    ASSERT_TRUE(reader.next(fields));
    ASSERT_EQ(fields.size(), 3u);
    EXPECT_EQ(fields[0], "hello, world");
    EXPECT_EQ(fields[1], "two\nlines");
    EXPECT_EQ(fields[2], "plain");
}

TEST(Csv, UnescapesDoubledQuotes) {
    std::istringstream in("\"she said \"\"hi\"\"\",x\n");
    ts::CsvReader reader(in);
    std::vector<std::string> fields;
    ASSERT_TRUE(reader.next(fields));
    EXPECT_EQ(fields[0], "she said \"hi\"");
}

TEST(Csv, StripsCarriageReturns) {
    std::istringstream in("a,b\r\n1,2\r\n");
    ts::CsvReader reader(in);
    std::vector<std::string> fields;
    ASSERT_TRUE(reader.next(fields));
    EXPECT_EQ(fields[1], "b");
    ASSERT_TRUE(reader.next(fields));
    EXPECT_EQ(fields[1], "2");
}

TEST(Csv, SkipsUtf8ByteOrderMark) {
    std::istringstream in("\xEF\xBB\xBF" "date,text\n");
    ts::CsvReader reader(in);
    std::vector<std::string> fields;
    ASSERT_TRUE(reader.next(fields));
    EXPECT_EQ(fields[0], "date");
}

TEST(Csv, LastLineWithoutNewline) {
    std::istringstream in("a,b\n1,2");
    ts::CsvReader reader(in);
    std::vector<std::string> fields;
    ASSERT_TRUE(reader.next(fields));
    ASSERT_TRUE(reader.next(fields));
    EXPECT_EQ(fields, (std::vector<std::string>{"1", "2"}));
    EXPECT_FALSE(reader.next(fields));
}

TEST(ColumnIndex, LookupIsCaseInsensitive) {
    ts::ColumnIndex index({"Date", "TEXT", "Retweets"});
    EXPECT_EQ(index.require("date"), 0u);
    EXPECT_EQ(index.require("Text"), 1u);
    EXPECT_TRUE(index.contains("RETWEETS"));
    EXPECT_FALSE(index.contains("close"));
    EXPECT_THROW(index.require("close"), ts::DataError);
}

TEST(ColumnIndex, BlankRowDetection) {
    EXPECT_TRUE(ts::blank_row({"", "", ""}));
    EXPECT_FALSE(ts::blank_row({"", "x", ""}));
}

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tweetstock/error.hpp"
#include "tweetstock/ingest.hpp"
#include "tweetstock/textprep.hpp"

namespace tweetstock {

/// Scoring constants, shared by the scorer and its tests.
namespace sentiment_constants {
inline constexpr double kNormalizationAlpha = 15.0;
inline constexpr double kExclamationBoost = 0.292;
inline constexpr int kMaxExclamations = 3;
inline constexpr double kCapsEmphasis = 0.733;
inline constexpr double kNegationScalar = -0.74;
inline constexpr double kBeforeButWeight = 0.5;
inline constexpr double kAfterButWeight = 1.5;
inline constexpr double kBoosterDistanceScale[3] = {1.0, 0.95, 0.9};
inline constexpr int kModifierLookback = 3;
} // namespace sentiment_constants

/// Valence dictionary plus degree-modifier and negation word lists. Keys
/// are stored lowercase; lookups lowercase their argument.
struct Lexicon {
    std::unordered_map<std::string, double> valence;
    std::unordered_map<std::string, double> booster;
    std::unordered_set<std::string> negation;
};

struct ScoredTweet {
    Date date;
    double compound = 0.0;
    long retweet_count = 0;
};

struct DailySentiment {
    Date date;
    double mean_compound = 0.0;
    double weighted_compound = 0.0;
    int tweet_count = 0;
};

enum class AggregateMode { simple, weighted };

inline double sentiment_value(const DailySentiment& day, AggregateMode mode) {
    return mode == AggregateMode::simple ? day.mean_compound : day.weighted_compound;
}

inline AggregateMode parse_aggregate_mode(std::string_view name) {
    if (name == "simple") return AggregateMode::simple;
    if (name == "weighted") return AggregateMode::weighted;
    throw DataError("unknown aggregate mode: " + std::string(name));
}

inline const char* aggregate_mode_name(AggregateMode mode) {
    return mode == AggregateMode::simple ? "simple" : "weighted";
}

namespace detail {

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

/// Strips leading and trailing non-alphanumeric characters, keeping the
/// word's interior (so "good!!" and "don't" both look up cleanly).
inline std::string_view strip_outer_punct(std::string_view word) {
    size_t begin = 0;
    size_t end = word.size();
    while (begin < end && !std::isalnum(static_cast<unsigned char>(word[begin]))) ++begin;
    while (end > begin && !std::isalnum(static_cast<unsigned char>(word[end - 1]))) --end;
    return word.substr(begin, end - begin);
}

inline bool is_all_caps(std::string_view word) {
    bool has_alpha = false;
    for (char c : word) {
        const unsigned char uc = static_cast<unsigned char>(c);
        if (std::isalpha(uc)) {
            has_alpha = true;
            if (!std::isupper(uc)) return false;
        }
    }
    return has_alpha;
}

/// Removes handles and URLs but keeps case and punctuation, which the
/// scoring heuristics read.
inline std::string lightly_clean(std::string_view text) {
    std::string s;
    s.reserve(text.size());
    for (size_t i = 0; i < text.size();) {
        if (text[i] == '@') {
            ++i;
            while (i < text.size() && handle_char(text[i])) ++i;
        } else if (url_starts_at(text, i)) {
            while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        } else {
            s.push_back(text[i++]);
        }
    }
    return s;
}

inline std::vector<std::string> whitespace_split(std::string_view s) {
    std::vector<std::string> words;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) words.emplace_back(s.substr(start, i - start));
    }
    return words;
}

} // namespace detail

/// Maps an unbounded valence sum into (−1, 1); odd and strictly monotone.
inline double normalize_score(double sum) {
    return sum / std::sqrt(sum * sum + sentiment_constants::kNormalizationAlpha);
}

/// Heuristic-adjusted valence sum for one tweet, before normalization.
/// Words get their lexicon valence, modified by ALL-CAPS emphasis (only
/// when the text mixes cased and all-caps words), by booster words in the
/// three preceding positions (distance-scaled, sign-following), and by
/// negation words in the same window. A "but" reweights the clause around
/// it, and trailing exclamation marks amplify the final sum toward its
/// sign.
inline double heuristic_sum(std::string_view text, const Lexicon& lexicon) {
    namespace sc = sentiment_constants;
    const std::string cleaned = detail::lightly_clean(text);
    const std::vector<std::string> words = detail::whitespace_split(cleaned);

    std::vector<std::string> cores(words.size());
    std::vector<bool> caps(words.size());
    int cased_words = 0;
    int caps_words = 0;
    for (size_t i = 0; i < words.size(); ++i) {
        const std::string_view core = detail::strip_outer_punct(words[i]);
        caps[i] = detail::is_all_caps(core);
        cores[i] = detail::ascii_lower(core);
        bool has_alpha = std::any_of(core.begin(), core.end(), [](char c) {
            return std::isalpha(static_cast<unsigned char>(c));
        });
        if (has_alpha) {
            ++cased_words;
            if (caps[i]) ++caps_words;
        }
    }
    const bool caps_differential = caps_words > 0 && caps_words < cased_words;

    std::vector<double> valences(words.size(), 0.0);
    for (size_t i = 0; i < words.size(); ++i) {
        if (cores[i].empty()) continue;
        if (lexicon.booster.contains(cores[i])) continue;
        auto hit = lexicon.valence.find(cores[i]);
        if (hit == lexicon.valence.end()) continue;

        double v = hit->second;
        if (caps[i] && caps_differential) v += v > 0 ? sc::kCapsEmphasis : -sc::kCapsEmphasis;

        for (int back = 1; back <= sc::kModifierLookback; ++back) {
            if (static_cast<size_t>(back) > i) break;
            const size_t j = i - static_cast<size_t>(back);
            if (lexicon.valence.contains(cores[j])) continue;

            auto boost = lexicon.booster.find(cores[j]);
            if (boost != lexicon.booster.end()) {
                double b = boost->second;
                if (v < 0) b = -b;
                if (caps[j] && caps_differential)
                    b += v > 0 ? sc::kCapsEmphasis : -sc::kCapsEmphasis;
                v += b * sc::kBoosterDistanceScale[back - 1];
            }
            if (lexicon.negation.contains(cores[j])) v *= sc::kNegationScalar;
        }
        valences[i] = v;
    }

    auto but = std::find(cores.begin(), cores.end(), "but");
    if (but != cores.end()) {
        const size_t but_index = static_cast<size_t>(but - cores.begin());
        for (size_t i = 0; i < valences.size(); ++i) {
            if (i < but_index) valences[i] *= sc::kBeforeButWeight;
            if (i > but_index) valences[i] *= sc::kAfterButWeight;
        }
    }

    double sum = 0.0;
    for (double v : valences) sum += v;

    const long exclamations =
        std::min<long>(std::count(cleaned.begin(), cleaned.end(), '!'), sc::kMaxExclamations);
    const double amplifier = static_cast<double>(exclamations) * sc::kExclamationBoost;
    if (sum > 0) sum += amplifier;
    else if (sum < 0) sum -= amplifier;
    return sum;
}

/// Compound score in [−1, 1] for one tweet; 0 when nothing matches.
inline double score_tweet(std::string_view text, const Lexicon& lexicon) {
    return normalize_score(heuristic_sum(text, lexicon));
}

inline std::vector<ScoredTweet> score_tweets(const std::vector<Tweet>& tweets,
                                             const Lexicon& lexicon) {
    std::vector<ScoredTweet> out;
    out.reserve(tweets.size());
    for (const Tweet& tw : tweets)
        out.push_back(ScoredTweet{tw.date, score_tweet(tw.text, lexicon), tw.retweet_count});
    return out;
}

/// Per-day aggregates, days ascending. The simple field is the arithmetic
/// mean; the weighted field weights each tweet by 1 + retweet_count so
/// zero-retweet tweets still contribute.
inline std::vector<DailySentiment> aggregate_daily(const std::vector<ScoredTweet>& scores) {
    struct Accumulator {
        double sum = 0.0;
        double weighted_sum = 0.0;
        double weight = 0.0;
        int count = 0;
    };
    std::map<Date, Accumulator> by_day;
    for (const ScoredTweet& s : scores) {
        if (s.retweet_count < 0)
            throw DataError("negative retweet count on " + s.date.to_string());
        Accumulator& acc = by_day[s.date];
        const double w = 1.0 + static_cast<double>(s.retweet_count);
        acc.sum += s.compound;
        acc.weighted_sum += w * s.compound;
        acc.weight += w;
        ++acc.count;
    }
    std::vector<DailySentiment> out;
    out.reserve(by_day.size());
    for (const auto& [date, acc] : by_day) {
        DailySentiment day;
        day.date = date;
        day.mean_compound = acc.sum / acc.count;
        day.weighted_compound = acc.weighted_sum / acc.weight;
        day.tweet_count = acc.count;
        out.push_back(day);
    }
    return out;
}

struct Histogram {
    std::vector<double> edges;  // bins + 1 boundaries
    std::vector<long> counts;   // one per bin
};

/// Equal-width histogram over [min, max]; a degenerate range puts all mass
/// in the first bin.
inline Histogram score_histogram(const std::vector<double>& values, int bins) {
    if (bins < 1) throw DataError("histogram needs at least one bin, got " + std::to_string(bins));
    if (values.empty()) throw DataError("histogram needs at least one value");

    const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *min_it;
    const double hi = *max_it;

    Histogram h;
    h.counts.assign(static_cast<size_t>(bins), 0);
    for (int i = 0; i <= bins; ++i)
        h.edges.push_back(lo + (hi - lo) * static_cast<double>(i) / bins);

    for (double v : values) {
        long idx = 0;
        if (hi > lo) {
            idx = static_cast<long>((v - lo) / (hi - lo) * bins);
            idx = std::clamp(idx, 0L, static_cast<long>(bins) - 1);
        }
        ++h.counts[static_cast<size_t>(idx)];
    }
    return h;
}

inline Histogram score_histogram(const std::vector<DailySentiment>& daily, int bins,
                                 AggregateMode mode = AggregateMode::simple) {
    std::vector<double> values;
    values.reserve(daily.size());
    for (const DailySentiment& day : daily) values.push_back(sentiment_value(day, mode));
    return score_histogram(values, bins);
}

// --- lexicon files ---------------------------------------------------------

namespace detail {

inline std::unordered_map<std::string, double>
load_token_value_file(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(std::string("cannot open ") + what + " file: " + path.string());
    std::unordered_map<std::string, double> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw DataError(std::string(what) + " line " + std::to_string(line_no) +
                            ": expected token<TAB>value");
        const std::string token = ascii_lower(line.substr(0, tab));
        double value = 0.0;
        if (!parse_double(std::string_view(line).substr(tab + 1), value) || !std::isfinite(value))
            throw DataError(std::string(what) + " line " + std::to_string(line_no) +
                            ": bad value for token '" + token + "'");
        out[token] = value;
    }
    if (out.empty()) throw DataError(std::string(what) + " file has no entries: " + path.string());
    return out;
}

} // namespace detail

inline Lexicon load_lexicon(const std::filesystem::path& valence_path,
                            const std::filesystem::path& booster_path,
                            const std::filesystem::path& negation_path) {
    Lexicon lex;
    lex.valence = detail::load_token_value_file(valence_path, "lexicon");
    lex.booster = detail::load_token_value_file(booster_path, "booster");

    std::ifstream in(negation_path, std::ios::binary);
    if (!in) throw IoError("cannot open negation file: " + negation_path.string());
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lex.negation.insert(detail::ascii_lower(line));
    }
    if (lex.negation.empty())
        throw DataError("negation file has no entries: " + negation_path.string());
    return lex;
}

/// Writes `date,mean_compound,weighted_compound,tweet_count` rows.
inline void save_daily_sentiment(const std::filesystem::path& path,
                                 const std::vector<DailySentiment>& daily) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write daily sentiment file: " + path.string());
    out << "date,mean_compound,weighted_compound,tweet_count\n";
    out.precision(17);
    for (const DailySentiment& day : daily)
        out << day.date.to_string() << ',' << day.mean_compound << ','
            << day.weighted_compound << ',' << day.tweet_count << '\n';
}

inline std::vector<DailySentiment> load_daily_sentiment(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open daily sentiment file: " + path.string());
    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields)) throw DataError("daily sentiment file is empty: " + path.string());
    ColumnIndex columns(fields);
    const size_t date_col = columns.require("date");
    const size_t mean_col = columns.require("mean_compound");
    const size_t weighted_col = columns.require("weighted_compound");
    const size_t count_col = columns.require("tweet_count");

    std::vector<DailySentiment> out;
    size_t line_no = 1;
    while (reader.next(fields)) {
        ++line_no;
        if (blank_row(fields)) continue;
        DailySentiment day;
        auto date = parse_date(fields.at(date_col));
        long count = 0;
        if (!date || !detail::parse_double(fields.at(mean_col), day.mean_compound) ||
            !detail::parse_double(fields.at(weighted_col), day.weighted_compound) ||
            !detail::parse_long(fields.at(count_col), count) || count < 1)
            throw DataError("bad daily sentiment row at line " + std::to_string(line_no));
        day.date = *date;
        day.tweet_count = static_cast<int>(count);
        out.push_back(day);
    }
    return out;
}

} // namespace tweetstock

#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "tweetstock/error.hpp"
#include "tweetstock/ingest.hpp"

namespace tweetstock {

/// Cleaned tokens for one calendar day, in tweet order then word order.
struct TokenStream {
    Date date;
    std::vector<std::string> tokens;
    int tweet_count = 0; // tweets that contributed at least one token
};

/// Token-to-index map. Index 0 is reserved for the padding symbol and maps
/// to no real token; real tokens occupy 1..size() in first-occurrence order.
class Vocabulary {
public:
    int add(const std::string& token) {
        auto [it, inserted] = index_.emplace(token, static_cast<int>(tokens_.size()) + 1);
        if (inserted) tokens_.push_back(token);
        return it->second;
    }

    std::optional<int> index_of(const std::string& token) const {
        auto it = index_.find(token);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& token_at(int index) const {
        if (index < 1 || index > static_cast<int>(tokens_.size()))
            throw DataError("vocabulary index out of range: " + std::to_string(index));
        return tokens_[static_cast<size_t>(index) - 1];
    }

    /// Number of real tokens; valid indices are 1..size().
    std::size_t size() const { return tokens_.size(); }

private:
    std::unordered_map<std::string, int> index_;
    std::vector<std::string> tokens_;
};

/// One network input: padded index sequence plus its day-level label and
/// provenance (source day and subset position within that day).
struct LabeledSequence {
    std::vector<int> indices;
    int label = 0;
    Date source_date;
    int subset_index = 0;
};

struct Dataset {
    int padded_length = 0;
    std::vector<LabeledSequence> sequences;
};

namespace detail {

inline bool url_starts_at(std::string_view s, size_t i) {
    auto matches = [&](std::string_view prefix) {
        if (s.size() - i < prefix.size()) return false;
        for (size_t j = 0; j < prefix.size(); ++j)
            if (std::tolower(static_cast<unsigned char>(s[i + j])) != prefix[j]) return false;
        return true;
    };
    return matches("http://") || matches("https://") || matches("www.");
}

inline bool handle_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

} // namespace detail

/// Neural-path tweet cleaner. Removal passes run in a fixed order: twitter
/// handles, then URLs, then digit characters, then punctuation (any byte
/// that is not a letter or whitespace, so non-ASCII bytes go too); the
/// remainder is lowercased and split on whitespace. Idempotent on its own
/// output.
inline std::vector<std::string> clean_and_tokenize(std::string_view text) {
    std::string s;
    s.reserve(text.size());

    // handles: '@' plus the following run of word characters
    for (size_t i = 0; i < text.size();) {
        if (text[i] == '@') {
            ++i;
            while (i < text.size() && detail::handle_char(text[i])) ++i;
        } else {
            s.push_back(text[i++]);
        }
    }

    // URLs: http://, https://, www. up to the next whitespace
    std::string t;
    t.reserve(s.size());
    for (size_t i = 0; i < s.size();) {
        if (detail::url_starts_at(s, i)) {
            while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        } else {
            t.push_back(s[i++]);
        }
    }

    // digits, then punctuation, then lowercase
    std::string u;
    u.reserve(t.size());
    for (char c : t) {
        const unsigned char uc = static_cast<unsigned char>(c);
        if (std::isdigit(uc)) continue;
        if (!std::isalpha(uc) && !std::isspace(uc)) continue;
        u.push_back(static_cast<char>(std::tolower(uc)));
    }

    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < u.size()) {
        while (i < u.size() && std::isspace(static_cast<unsigned char>(u[i]))) ++i;
        size_t start = i;
        while (i < u.size() && !std::isspace(static_cast<unsigned char>(u[i]))) ++i;
        if (i > start) tokens.emplace_back(u.substr(start, i - start));
    }
    return tokens;
}

/// Concatenates the cleaned tokens of all tweets sharing a calendar date
/// into one stream per day, days ascending. Days where no tweet survives
/// cleaning are omitted.
inline std::vector<TokenStream> concat_by_day(const std::vector<Tweet>& tweets) {
    std::map<Date, TokenStream> by_day;
    for (const Tweet& tw : tweets) {
        auto tokens = clean_and_tokenize(tw.text);
        if (tokens.empty()) continue;
        TokenStream& stream = by_day[tw.date];
        stream.date = tw.date;
        stream.tokens.insert(stream.tokens.end(), tokens.begin(), tokens.end());
        ++stream.tweet_count;
    }
    std::vector<TokenStream> out;
    out.reserve(by_day.size());
    for (auto& [date, stream] : by_day) out.push_back(std::move(stream));
    return out;
}

struct SubsetSplit {
    std::vector<std::vector<std::string>> subsets;
    int shortfall = 0; // requested subsets that could not be filled (k > tokens)
};

/// Partitions `tokens` into k contiguous order-preserving subsets whose
/// sizes differ by at most one, remainder tokens going to the earliest
/// subsets. With fewer tokens than k, only non-empty singleton subsets are
/// emitted and the shortfall is reported.
inline SubsetSplit split_into_subsets(const std::vector<std::string>& tokens, int k) {
    if (k < 1) throw DataError("subset count must be >= 1, got " + std::to_string(k));
    SubsetSplit out;
    const size_t n = tokens.size();
    const size_t groups = std::min<size_t>(static_cast<size_t>(k), n);
    out.shortfall = static_cast<int>(static_cast<size_t>(k) - groups);
    if (groups == 0) return out;

    const size_t base = n / groups;
    const size_t remainder = n % groups;
    size_t pos = 0;
    for (size_t g = 0; g < groups; ++g) {
        const size_t take = base + (g < remainder ? 1 : 0);
        out.subsets.emplace_back(tokens.begin() + pos, tokens.begin() + pos + take);
        pos += take;
    }
    return out;
}

/// Builds the token-to-index map over all streams, first-occurrence order.
inline Vocabulary build_vocabulary(const std::vector<TokenStream>& streams) {
    Vocabulary vocab;
    for (const TokenStream& stream : streams)
        for (const std::string& token : stream.tokens) vocab.add(token);
    if (vocab.size() == 0) throw DataError("empty corpus: no tokens to index");
    return vocab;
}

/// Encodes tokens to vocabulary indices (unknown tokens are dropped) and
/// post-pads with zeros to length n.
inline std::vector<int> encode_and_pad(const std::vector<std::string>& tokens,
                                       const Vocabulary& vocab, int n) {
    std::vector<int> indices;
    indices.reserve(static_cast<size_t>(n));
    for (const std::string& token : tokens)
        if (auto idx = vocab.index_of(token)) indices.push_back(*idx);
    if (indices.size() > static_cast<size_t>(n))
        throw DataError("padded length " + std::to_string(n) +
                        " is smaller than encoded length " +
                        std::to_string(indices.size()));
    indices.resize(static_cast<size_t>(n), 0);
    return indices;
}

/// A day stream joined with its direction label.
struct LabeledStream {
    TokenStream stream;
    int label = 0;
};

/// Keeps only streams whose date carries a label (tweets on non-trading
/// days or beyond the labeling horizon drop out here).
inline std::vector<LabeledStream> label_streams(const std::vector<TokenStream>& streams,
                                                const std::vector<DirectionLabel>& labels) {
    std::map<Date, int> by_date;
    for (const DirectionLabel& l : labels) by_date.emplace(l.date, l.value);
    std::vector<LabeledStream> out;
    for (const TokenStream& stream : streams) {
        auto it = by_date.find(stream.date);
        if (it != by_date.end()) out.push_back(LabeledStream{stream, it->second});
    }
    return out;
}

/// Splits each labeled stream into k subsets, encodes them, and pads every
/// sequence to the longest subset length in the dataset.
inline Dataset build_sequences(const std::vector<LabeledStream>& streams,
                               const Vocabulary& vocab, int k,
                               std::size_t* total_shortfall = nullptr) {
    std::vector<std::vector<std::string>> subset_tokens;
    std::vector<std::pair<size_t, int>> origin; // stream index, subset index
    std::size_t shortfall = 0;
    for (size_t s = 0; s < streams.size(); ++s) {
        SubsetSplit split = split_into_subsets(streams[s].stream.tokens, k);
        shortfall += static_cast<size_t>(split.shortfall);
        for (size_t g = 0; g < split.subsets.size(); ++g) {
            subset_tokens.push_back(std::move(split.subsets[g]));
            origin.emplace_back(s, static_cast<int>(g));
        }
    }
    if (total_shortfall) *total_shortfall = shortfall;

    int padded_length = 0;
    std::vector<std::vector<int>> encoded(subset_tokens.size());
    for (size_t i = 0; i < subset_tokens.size(); ++i) {
        for (const std::string& token : subset_tokens[i])
            if (auto idx = vocab.index_of(token)) encoded[i].push_back(*idx);
        padded_length = std::max(padded_length, static_cast<int>(encoded[i].size()));
    }

    Dataset dataset;
    dataset.padded_length = padded_length;
    dataset.sequences.reserve(encoded.size());
    for (size_t i = 0; i < encoded.size(); ++i) {
        LabeledSequence seq;
        seq.indices = std::move(encoded[i]);
        seq.indices.resize(static_cast<size_t>(padded_length), 0);
        seq.label = streams[origin[i].first].label;
        seq.source_date = streams[origin[i].first].stream.date;
        seq.subset_index = origin[i].second;
        dataset.sequences.push_back(std::move(seq));
    }
    return dataset;
}

struct PrepStats {
    std::size_t day_count = 0;
    std::size_t sequence_count = 0;
    std::size_t shortfall = 0;
    int padded_length = 0;
    std::size_t vocab_size = 0;
};

struct PrepResult {
    Dataset dataset;
    Vocabulary vocabulary;
    PrepStats stats;
};

/// Full preprocessing pipeline: clean and concatenate tweets per day, keep
/// days labeled at `delay`, build the vocabulary, split each day into k
/// subsets, encode and pad.
inline PrepResult prepare_dataset(const std::vector<Tweet>& tweets,
                                  const std::vector<PriceBar>& bars, int k, int delay) {
    auto streams = concat_by_day(tweets);
    auto labels = label_directions(bars, delay);
    auto labeled = label_streams(streams, labels);
    if (labeled.empty()) throw DataError("no tweet days align with labeled trading days");

    std::vector<TokenStream> kept;
    kept.reserve(labeled.size());
    for (const LabeledStream& ls : labeled) kept.push_back(ls.stream);

    PrepResult out;
    out.vocabulary = build_vocabulary(kept);
    out.dataset = build_sequences(labeled, out.vocabulary, k, &out.stats.shortfall);
    out.stats.day_count = labeled.size();
    out.stats.sequence_count = out.dataset.sequences.size();
    out.stats.padded_length = out.dataset.padded_length;
    out.stats.vocab_size = out.vocabulary.size();
    return out;
}

// --- dataset and vocabulary files -----------------------------------------

/// Writes a dataset as JSON lines: a header object carrying the padded
/// length (merged with `header_extra`), then one object per sequence.
inline void save_dataset(const std::filesystem::path& path, const Dataset& dataset,
                         const nlohmann::ordered_json& header_extra = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write dataset file: " + path.string());
    nlohmann::ordered_json header;
    header["padded_length"] = dataset.padded_length;
    header["sequence_count"] = dataset.sequences.size();
    if (header_extra.is_object())
        for (auto& [key, value] : header_extra.items()) header[key] = value;
    out << header.dump() << '\n';
    for (const LabeledSequence& seq : dataset.sequences) {
        nlohmann::ordered_json row;
        row["date"] = seq.source_date.to_string();
        row["subset"] = seq.subset_index;
        row["label"] = seq.label;
        row["indices"] = seq.indices;
        out << row.dump() << '\n';
    }
}

inline Dataset load_dataset(const std::filesystem::path& path,
                            nlohmann::ordered_json* header_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("dataset file is empty: " + path.string());

    nlohmann::ordered_json header = nlohmann::ordered_json::parse(line, nullptr, false);
    if (header.is_discarded() || !header.contains("padded_length"))
        throw DataError("dataset header missing padded_length: " + path.string());
    if (header_out) *header_out = header;

    Dataset dataset;
    dataset.padded_length = header["padded_length"].get<int>();
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto row = nlohmann::ordered_json::parse(line, nullptr, false);
        if (row.is_discarded())
            throw DataError("bad dataset row at line " + std::to_string(line_no));
        LabeledSequence seq;
        auto date = parse_date(row.at("date").get<std::string>());
        if (!date) throw DataError("bad date at line " + std::to_string(line_no));
        seq.source_date = *date;
        seq.subset_index = row.at("subset").get<int>();
        seq.label = row.at("label").get<int>();
        seq.indices = row.at("indices").get<std::vector<int>>();
        if (seq.indices.size() != static_cast<size_t>(dataset.padded_length))
            throw DataError("sequence length mismatch at line " + std::to_string(line_no));
        dataset.sequences.push_back(std::move(seq));
    }
    return dataset;
}

/// One token per line; the 1-based line number is the token's index.
inline void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write vocabulary file: " + path.string());
    for (int i = 1; i <= static_cast<int>(vocab.size()); ++i)
        out << vocab.token_at(i) << '\n';
}

inline Vocabulary load_vocabulary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open vocabulary file: " + path.string());
    Vocabulary vocab;
    std::string token;
    while (std::getline(in, token)) {
        if (!token.empty() && token.back() == '\r') token.pop_back();
        if (!token.empty()) vocab.add(token);
    }
    return vocab;
}

} // namespace tweetstock

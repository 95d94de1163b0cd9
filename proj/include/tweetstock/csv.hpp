#pragma once

#include <algorithm>
#include <cctype>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tweetstock/error.hpp"

namespace tweetstock {

/// Streaming CSV reader: quoted fields, embedded commas/newlines, doubled
/// quote escapes, CRLF line endings, UTF-8 BOM.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {
        // Swallow a UTF-8 BOM if present.
        if (in_.peek() == 0xEF) {
            char bom[3];
            in_.read(bom, 3);
            if (in_.gcount() == 3 &&
                !(bom[0] == '\xEF' && bom[1] == '\xBB' && bom[2] == '\xBF')) {
                for (int i = static_cast<int>(in_.gcount()) - 1; i >= 0; --i)
                    in_.putback(bom[i]);
            }
        }
    }

    /// Reads the next record into `fields`. Returns false at end of input.
    bool next(std::vector<std::string>& fields) {
        fields.clear();
        int c = in_.get();
        if (c == EOF) return false;

        std::string field;
        bool quoted = false;
        while (true) {
            if (c == EOF) {
                fields.push_back(std::move(field));
                return true;
            }
            if (quoted) {
                if (c == '"') {
                    if (in_.peek() == '"') {
                        in_.get();
                        field.push_back('"');
                    } else {
                        quoted = false;
                    }
                } else {
                    field.push_back(static_cast<char>(c));
                }
            } else if (c == '"' && field.empty()) {
                quoted = true;
            } else if (c == ',') {
                fields.push_back(std::move(field));
                field.clear();
            } else if (c == '\n') {
                if (!field.empty() && field.back() == '\r') field.pop_back();
                fields.push_back(std::move(field));
                return true;
            } else {
                field.push_back(static_cast<char>(c));
            }
            c = in_.get();
        }
    }

private:
    std::istream& in_;
};

/// Maps header names to column positions; lookups are case-insensitive.
class ColumnIndex {
public:
    explicit ColumnIndex(const std::vector<std::string>& header) {
        for (size_t i = 0; i < header.size(); ++i)
            index_.emplace(lower(header[i]), i);
    }

    size_t require(std::string_view name) const {
        auto it = index_.find(lower(name));
        if (it == index_.end())
            throw DataError("missing column '" + std::string(name) + "' in CSV header");
        return it->second;
    }

    bool contains(std::string_view name) const {
        return index_.count(lower(name)) > 0;
    }

private:
    static std::string lower(std::string_view s) {
        std::string out(s);
        std::transform(out.begin(), out.end(), out.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return out;
    }

    std::unordered_map<std::string, size_t> index_;
};

inline bool blank_row(const std::vector<std::string>& fields) {
    return std::all_of(fields.begin(), fields.end(),
                       [](const std::string& f) { return f.empty(); });
}

} // namespace tweetstock

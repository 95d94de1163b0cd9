#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tweetstock/binio.hpp"
#include "tweetstock/error.hpp"
#include "tweetstock/ingest.hpp"
#include "tweetstock/matrix.hpp"
#include "tweetstock/rng.hpp"
#include "tweetstock/textprep.hpp"

namespace tweetstock {

inline constexpr int kDefaultEmbeddingDim = 200;
inline constexpr double kOovInitRange = 0.05;

/// Token vectors, one row per vocabulary index. Row 0 backs the padding
/// symbol: it stays exactly zero and never receives updates.
struct EmbeddingMatrix {
    Matrix values; // (V+1) x p, row 0 = padding
    bool trainable = true;

    std::size_t vocab_size() const { return values.rows() == 0 ? 0 : values.rows() - 1; }
    std::size_t dim() const { return values.cols(); }
    std::span<const double> row(int index) const { return values.row(static_cast<std::size_t>(index)); }
};

struct GloveLoad {
    EmbeddingMatrix embeddings;
    std::size_t found = 0;   // vocabulary tokens present in the file
    double coverage = 0.0;   // found / vocabulary size
};

namespace detail {

inline std::vector<std::string_view> split_spaces(std::string_view line) {
    std::vector<std::string_view> fields;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        size_t start = i;
        while (i < line.size() && line[i] != ' ') ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

} // namespace detail

/// Fills a fresh embedding row with small uniform values; seeded per row so
/// a token's fallback vector depends only on (seed, index).
inline void init_oov_row(std::span<double> row, std::uint64_t seed, int index) {
    Rng rng(derive_seed(seed, "embed-oov", static_cast<std::uint64_t>(index)));
    for (double& v : row) v = rng.uniform(-kOovInitRange, kOovInitRange);
}

/// Streams a GloVe text file (`token v1 ... vp` per line) and keeps the
/// vectors of vocabulary tokens. Tokens absent from the file get seeded
/// uniform values in [-0.05, 0.05]. Every file row must carry exactly p
/// values, whether or not its token is kept.
inline GloveLoad load_glove(const std::filesystem::path& path, const Vocabulary& vocab,
                            std::uint64_t seed, int dim = kDefaultEmbeddingDim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embedding file: " + path.string());

    const std::size_t v = vocab.size();
    GloveLoad out;
    out.embeddings.values = Matrix(v + 1, static_cast<std::size_t>(dim));

    std::vector<bool> filled(v + 1, false);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::split_spaces(line);
        if (fields.size() != static_cast<std::size_t>(dim) + 1)
            throw DataError("embedding file line " + std::to_string(line_no) + ": expected " +
                            std::to_string(dim) + " values, got " +
                            std::to_string(fields.empty() ? 0 : fields.size() - 1));
        auto index = vocab.index_of(std::string(fields[0]));
        if (!index || filled[static_cast<std::size_t>(*index)]) continue;

        auto row = out.embeddings.values.row(static_cast<std::size_t>(*index));
        for (int j = 0; j < dim; ++j) {
            double value = 0.0;
            if (!detail::parse_double(fields[static_cast<std::size_t>(j) + 1], value) ||
                !std::isfinite(value))
                throw DataError("embedding file line " + std::to_string(line_no) +
                                ": bad value in column " + std::to_string(j + 2));
            row[static_cast<std::size_t>(j)] = value;
        }
        filled[static_cast<std::size_t>(*index)] = true;
        ++out.found;
    }

    for (std::size_t i = 1; i <= v; ++i)
        if (!filled[i])
            init_oov_row(out.embeddings.values.row(i), seed, static_cast<int>(i));

    out.coverage = v == 0 ? 0.0 : static_cast<double>(out.found) / static_cast<double>(v);
    return out;
}

/// Seeded random embeddings for corpora trained without pretrained vectors.
inline EmbeddingMatrix random_embeddings(std::size_t vocab_size, int dim, std::uint64_t seed) {
    EmbeddingMatrix e;
    e.values = Matrix(vocab_size + 1, static_cast<std::size_t>(dim));
    for (std::size_t i = 1; i <= vocab_size; ++i)
        init_oov_row(e.values.row(i), seed, static_cast<int>(i));
    return e;
}

/// Materializes the embedding rows for a padded index sequence; index 0
/// yields the zero vector.
inline std::vector<Vector> lookup(const std::vector<int>& indices, const EmbeddingMatrix& e) {
    std::vector<Vector> out;
    out.reserve(indices.size());
    for (int idx : indices) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= e.values.rows())
            throw DataError("embedding index out of range: " + std::to_string(idx));
        auto row = e.values.row(static_cast<std::size_t>(idx));
        out.emplace_back(row.begin(), row.end());
    }
    return out;
}

/// Adds each step's upstream gradient into the gradient row of the step's
/// token; repeated tokens accumulate and the padding row stays zero.
inline void accumulate_embedding_grads(const std::vector<int>& indices,
                                       const std::vector<Vector>& upstream, Matrix& grad) {
    if (indices.size() != upstream.size())
        throw DataError("embedding gradient shape mismatch: " + std::to_string(indices.size()) +
                        " indices vs " + std::to_string(upstream.size()) + " gradients");
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const int idx = indices[k];
        if (idx == 0) continue;
        if (idx < 0 || static_cast<std::size_t>(idx) >= grad.rows())
            throw DataError("embedding index out of range: " + std::to_string(idx));
        if (upstream[k].size() != grad.cols())
            throw DataError("embedding gradient dimension mismatch at step " + std::to_string(k));
        auto row = grad.row(static_cast<std::size_t>(idx));
        for (std::size_t j = 0; j < row.size(); ++j) row[j] += upstream[k][j];
    }
}

// --- embedding checkpoint ----------------------------------------------------

/// Binary layout: u64 vocabulary size V, u64 dimension p, then V rows of p
/// doubles (the padding row is implicit and zero).
inline void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& e) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write embedding checkpoint: " + path.string());
    detail::write_u64(out, e.vocab_size());
    detail::write_u64(out, e.dim());
    for (std::size_t i = 1; i <= e.vocab_size(); ++i) detail::write_f64_span(out, e.values.row(i));
    if (!out) throw IoError("failed writing embedding checkpoint: " + path.string());
}

inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embedding checkpoint: " + path.string());
    const std::uint64_t v = detail::read_u64(in, "vocabulary size");
    const std::uint64_t p = detail::read_u64(in, "dimension");
    EmbeddingMatrix e;
    e.values = Matrix(static_cast<std::size_t>(v) + 1, static_cast<std::size_t>(p));
    for (std::uint64_t i = 1; i <= v; ++i)
        detail::read_f64_span(in, e.values.row(static_cast<std::size_t>(i)), "embedding row");
    return e;
}

} // namespace tweetstock

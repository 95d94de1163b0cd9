#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "tweetstock/tweetstock.hpp"

namespace testutil {

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        std::ostringstream name;
        name << "tweetstock_test_" << ::getpid() << '_' << counter.fetch_add(1) << '_'
             << std::hex << rd();
        path_ = std::filesystem::temp_directory_path() / name.str();
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

    std::filesystem::path write(const std::string& name, const std::string& content) const {
        const auto p = path_ / name;
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p;
    }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// --- fixture files ----------------------------------------------------------

inline std::string tweets_csv(const std::vector<std::string>& rows) {
    std::string out = "date,text,retweets\n";
    for (const std::string& row : rows) out += row + "\n";
    return out;
}

inline std::string prices_csv(const std::vector<std::string>& rows) {
    std::string out = "date,close\n";
    for (const std::string& row : rows) out += row + "\n";
    return out;
}

/// Twelve consecutive trading days of tweets and alternating-direction
/// closes; the last bar stays unlabeled at delay 1, leaving eleven labeled
/// tweet days.
struct CorpusFiles {
    std::filesystem::path tweets;
    std::filesystem::path prices;
};

inline CorpusFiles write_corpus(const TempDir& dir) {
    const std::vector<std::string> days = {"2016-01-04", "2016-01-05", "2016-01-06",
                                           "2016-01-07", "2016-01-08", "2016-01-11",
                                           "2016-01-12", "2016-01-13", "2016-01-14",
                                           "2016-01-15", "2016-01-18", "2016-01-19"};
    const std::vector<std::string> texts = {
        "very good day for tech stocks overall",
        "bad news hit the whole market today",
        "great earnings lift shares before the open",
        "terrible guidance sinks the stock again",
        "not good signals from the supply chain",
        "investors love the new product launch",
        "traders hate the latest filing details",
        "results look good despite weak forecasts",
        "analysts call the quarter very bad",
        "upgrade makes the outlook great for bulls",
        "downgrade leaves sentiment terrible for bears",
        "quiet session with mixed closing prices",
    };
    std::vector<std::string> tweet_rows;
    for (std::size_t i = 0; i < days.size(); ++i)
        tweet_rows.push_back(days[i] + "," + texts[i] + "," + std::to_string(i % 4));

    std::vector<std::string> price_rows;
    double close = 100.0;
    for (std::size_t i = 0; i < days.size(); ++i) {
        close += (i % 2 == 0) ? 2.0 : -1.0;
        price_rows.push_back(days[i] + "," + std::to_string(close));
    }

    CorpusFiles corpus;
    corpus.tweets = dir.write("tweets.csv", tweets_csv(tweet_rows));
    corpus.prices = dir.write("prices.csv", prices_csv(price_rows));
    return corpus;
}

/// Valence, booster, and negation files with a few fixed entries
/// (good = 1.9, bad = -2.5, great = 3.1, terrible = -3.4).
struct LexiconFiles {
    std::filesystem::path valence;
    std::filesystem::path boosters;
    std::filesystem::path negations;
};

inline LexiconFiles write_lexicon_files(const TempDir& dir) {
    LexiconFiles files;
    files.valence = dir.write("lexicon.tsv",
                              "good\t1.9\n"
                              "bad\t-2.5\n"
                              "great\t3.1\n"
                              "terrible\t-3.4\n"
                              "love\t3.2\n"
                              "hate\t-2.7\n");
    files.boosters = dir.write("boosters.tsv",
                               "very\t0.293\n"
                               "extremely\t0.293\n"
                               "slightly\t-0.293\n");
    files.negations = dir.write("negations.txt", "not\nnever\nno\nisnt\nwasnt\n");
    return files;
}

// --- reference statistics -----------------------------------------------------

/// Plain Pearson correlation computed directly from the definition.
inline double pearson_reference(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

// --- gradient checking ----------------------------------------------------------

/// Pairs every trainable scalar with its slot in a gradient accumulator.
struct FlatParams {
    std::vector<double*> theta;
    std::vector<const double*> grad;

    void add(double* t, const double* g) {
        theta.push_back(t);
        grad.push_back(g);
    }
    void add_span(std::span<double> t, std::span<const double> g) {
        for (std::size_t i = 0; i < t.size(); ++i) add(&t[i], &g[i]);
    }
};

inline FlatParams flatten_params(tweetstock::Model& model, const tweetstock::ModelGrads& grads) {
    FlatParams flat;
    if (model.embeddings.trainable) {
        for (std::size_t r = 1; r < model.embeddings.values.rows(); ++r)
            flat.add_span(model.embeddings.values.row(r), grads.embedding.row(r));
    }
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        tweetstock::LayerParams& lp = model.layers[l];
        const tweetstock::LayerGrads& lg = grads.layers[l];
        flat.add_span(lp.fwd.W.data(), lg.fwd_w.data());
        flat.add_span(lp.fwd.b, lg.fwd_b);
        if (model.config.direction == tweetstock::Direction::bi) {
            flat.add_span(lp.bwd.W.data(), lg.bwd_w.data());
            flat.add_span(lp.bwd.b, lg.bwd_b);
        }
    }
    flat.add_span(model.dense.w, grads.dense_w);
    flat.add(&model.dense.b, &grads.dense_b);
    return flat;
}

/// Mean clamped cross-entropy over a batch, matching the training loss.
inline double batch_loss(const tweetstock::Model& model,
                         const std::vector<const tweetstock::LabeledSequence*>& batch,
                         const std::vector<tweetstock::DropoutPlan>* plans) {
    tweetstock::ForwardCache cache;
    double sum = 0.0;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        tweetstock::forward_sample(model, batch[s]->indices, plans ? &(*plans)[s] : nullptr,
                                   cache);
        const double p = std::clamp(cache.prob, tweetstock::kLossEpsilon,
                                    1.0 - tweetstock::kLossEpsilon);
        sum -= batch[s]->label == 1 ? std::log(p) : std::log1p(-p);
    }
    return sum / static_cast<double>(batch.size());
}

/// Relative error with a magnitude floor so near-zero gradients are
/// compared on an absolute scale instead of amplifying rounding noise.
inline double gradient_rel_error(double analytic, double numeric) {
    const double scale = std::max({1e-3, std::abs(analytic), std::abs(numeric)});
    return std::abs(analytic - numeric) / scale;
}

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
};

/// Central finite differences over every trainable parameter against the
/// analytic batch gradient, with dropout masks held fixed.
inline GradCheck finite_difference_check(tweetstock::Model& model,
                                         const std::vector<tweetstock::LabeledSequence>& batch,
                                         const std::vector<tweetstock::DropoutPlan>* plans,
                                         double step) {
    std::vector<const tweetstock::LabeledSequence*> ptrs;
    for (const auto& seq : batch) ptrs.push_back(&seq);

    const tweetstock::BatchResult analytic = tweetstock::batch_gradients(model, ptrs, plans);
    FlatParams flat = flatten_params(model, analytic.grads);

    GradCheck check;
    check.checked = flat.theta.size();
    for (std::size_t i = 0; i < flat.theta.size(); ++i) {
        double& theta = *flat.theta[i];
        const double saved = theta;
        theta = saved + step;
        const double up = batch_loss(model, ptrs, plans);
        theta = saved - step;
        const double down = batch_loss(model, ptrs, plans);
        theta = saved;
        const double numeric = (up - down) / (2.0 * step);
        check.max_rel_error =
            std::max(check.max_rel_error, gradient_rel_error(*flat.grad[i], numeric));
    }
    return check;
}

// --- synthetic classification task -----------------------------------------------

/// Embedding rows drawn uniformly from [-range, range]; synthetic tasks
/// choose their own input scale instead of the corpus default.
inline tweetstock::EmbeddingMatrix task_embeddings(std::size_t vocab, int dim, double range,
                                                   std::uint64_t seed) {
    tweetstock::EmbeddingMatrix e;
    e.values = tweetstock::Matrix(vocab + 1, static_cast<std::size_t>(dim));
    tweetstock::Rng rng(seed);
    for (std::size_t r = 1; r <= vocab; ++r)
        for (double& v : e.values.row(r)) v = rng.uniform(-range, range);
    return e;
}

/// Sequences of filler tokens where exactly half contain a marker token at
/// a random position; the label is marker presence. Order is shuffled.
inline std::vector<tweetstock::LabeledSequence> marker_sequences(int count, int length,
                                                                 int vocab_size, int marker_index,
                                                                 std::uint64_t seed,
                                                                 int occurrences = 1) {
    tweetstock::Rng rng(seed);
    std::vector<tweetstock::LabeledSequence> out;
    out.reserve(static_cast<std::size_t>(count));
    std::vector<int> positions(static_cast<std::size_t>(length));
    for (int i = 0; i < count; ++i) {
        tweetstock::LabeledSequence seq;
        seq.label = i % 2;
        seq.source_date = {2020, 1, 1};
        seq.subset_index = i;
        seq.indices.resize(static_cast<std::size_t>(length));
        for (int& idx : seq.indices) {
            do {
                idx = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab_size)));
            } while (idx == marker_index);
        }
        if (seq.label == 1) {
            std::iota(positions.begin(), positions.end(), 0);
            rng.shuffle(positions);
            for (int j = 0; j < std::min(occurrences, length); ++j)
                seq.indices[static_cast<std::size_t>(positions[static_cast<std::size_t>(j)])] =
                    marker_index;
        }
        out.push_back(std::move(seq));
    }
    rng.shuffle(out);
    return out;
}

// --- CLI driving ------------------------------------------------------------

#ifdef TWEETSTOCK_CLI_PATH

struct CliResult {
    int exit_code = -1;
    std::string output;
};

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    out += "'";
    return out;
}

/// Runs the command-line binary with the given arguments, capturing the
/// combined output and exit code.
inline CliResult run_cli(const std::vector<std::string>& args, const TempDir& scratch) {
    static std::atomic<unsigned> counter{0};
    const auto capture = scratch.file("cli_output_" + std::to_string(counter.fetch_add(1)));
    std::string cmd = shell_quote(TWEETSTOCK_CLI_PATH);
    for (const std::string& arg : args) cmd += " " + shell_quote(arg);
    cmd += " > " + shell_quote(capture.string()) + " 2>&1";

    CliResult result;
    const int status = std::system(cmd.c_str());
    if (status != -1 && WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    result.output = read_file(capture);
    return result;
}

#endif // TWEETSTOCK_CLI_PATH

} // namespace testutil

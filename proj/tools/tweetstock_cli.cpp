#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tweetstock/tweetstock.hpp"
#include "tweetstock/version.hpp"

namespace ts = tweetstock;
using nlohmann::ordered_json;

// Exit codes: 0 success, 2 file access, 3 bad data, 4 numeric failure,
// 1 anything else. CLI11 reports its own usage errors.

namespace {

std::filesystem::path ensure_outdir(const std::string& out) {
    std::filesystem::path dir(out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ts::IoError("cannot create output directory: " + dir.string());
    return dir;
}

void write_json_file(const std::filesystem::path& path, const ordered_json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ts::IoError("cannot write report: " + path.string());
    out << j.dump(2) << '\n';
}

/// Accepts "4", "1,2,5", or the range form "1..7".
std::vector<int> parse_delays(const std::string& text) {
    std::vector<int> delays;
    const auto parse_int = [&](const std::string& s) {
        long v = 0;
        if (!ts::detail::parse_long(s, v))
            throw ts::DataError("bad delay value: '" + s + "'");
        return static_cast<int>(v);
    };
    const std::size_t dots = text.find("..");
    if (dots != std::string::npos) {
        const int lo = parse_int(text.substr(0, dots));
        const int hi = parse_int(text.substr(dots + 2));
        if (lo > hi) throw ts::DataError("delay range is empty: " + text);
        for (int d = lo; d <= hi; ++d) delays.push_back(d);
        return delays;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string piece =
            text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!piece.empty()) delays.push_back(parse_int(piece));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (delays.empty()) throw ts::DataError("no delays given");
    return delays;
}

ordered_json distribution_json(const ts::ClassDistribution& dist) {
    ordered_json j;
    j["count_0"] = dist.counts[0];
    j["count_1"] = dist.counts[1];
    j["fraction_0"] = dist.fractions[0];
    j["fraction_1"] = dist.fractions[1];
    return j;
}

ordered_json summary_stats_json(const std::vector<double>& values) {
    ordered_json j;
    try {
        const ts::DistributionSummary s = ts::distribution_summary(values);
        j["n"] = s.n;
        j["mean"] = s.mean;
        j["sd"] = s.sd;
        j["skewness"] = s.skewness;
        j["excess_kurtosis"] = s.excess_kurtosis;
    } catch (const ts::DataError& e) {
        j["warning"] = e.what();
    }
    return j;
}

struct TweetOpts {
    std::string path;
    std::string date_column = "date";
    std::string text_column = "text";
    std::string retweets_column = "retweets";

    ts::TweetColumns columns() const { return {date_column, text_column, retweets_column}; }
    ordered_json json() const {
        return {{"tweets", path},
                {"date_column", date_column},
                {"text_column", text_column},
                {"retweets_column", retweets_column}};
    }
};

void add_tweet_options(CLI::App* cmd, TweetOpts& opts) {
    cmd->add_option("--tweets", opts.path, "tweet CSV file")->required();
    cmd->add_option("--date-column", opts.date_column, "tweet date column name")
        ->capture_default_str();
    cmd->add_option("--text-column", opts.text_column, "tweet text column name")
        ->capture_default_str();
    cmd->add_option("--retweets-column", opts.retweets_column,
                    "retweet count column name; empty for none")
        ->capture_default_str();
}

struct LexiconOpts {
    std::string lexicon;
    std::string boosters;
    std::string negations;

    ts::Lexicon load() const { return ts::load_lexicon(lexicon, boosters, negations); }
    ordered_json json() const {
        return {{"lexicon", lexicon}, {"boosters", boosters}, {"negations", negations}};
    }
};

void add_lexicon_options(CLI::App* cmd, LexiconOpts& opts) {
    cmd->add_option("--lexicon", opts.lexicon, "token<TAB>valence file")->required();
    cmd->add_option("--boosters", opts.boosters, "token<TAB>increment file")->required();
    cmd->add_option("--negations", opts.negations, "one negation token per line")->required();
}

struct HpOpts {
    double dropout = 0.2;
    int batch = 32;
    int hidden = 100;
    std::string direction = "uni";
    int layers = 1;
    double learning_rate = 0.001;
    int epochs = 10;
    bool forget_bias_one = false;

    ts::Hyperparams build() const {
        ts::Hyperparams hp;
        hp.dropout = dropout;
        hp.batch_size = batch;
        hp.hidden_units = hidden;
        hp.direction = ts::parse_direction(direction);
        hp.num_layers = layers;
        hp.learning_rate = learning_rate;
        hp.epochs = epochs;
        hp.forget_bias_one = forget_bias_one;
        hp.validate();
        return hp;
    }
};

void add_hp_options(CLI::App* cmd, HpOpts& opts) {
    cmd->add_option("--dropout", opts.dropout, "dropout rate")->capture_default_str();
    cmd->add_option("--batch", opts.batch, "mini-batch size")->capture_default_str();
    cmd->add_option("--hidden", opts.hidden, "hidden units")->capture_default_str();
    cmd->add_option("--direction", opts.direction, "uni or bi")->capture_default_str();
    cmd->add_option("--layers", opts.layers, "stacked layer count (1 or 2)")
        ->capture_default_str();
    cmd->add_option("--lr", opts.learning_rate, "learning rate")->capture_default_str();
    cmd->add_option("--epochs", opts.epochs, "training epochs")->capture_default_str();
    cmd->add_flag("--forget-bias-one", opts.forget_bias_one, "initialize forget biases to 1");
}

struct SplitOpts {
    std::string mode = "random";
    double train_frac = 0.70;
    double test_frac = 0.20;
    double val_frac = 0.10;

    ts::SplitSpec build(std::uint64_t seed) const {
        ts::SplitSpec spec;
        spec.mode = ts::parse_split_mode(mode);
        spec.train_frac = train_frac;
        spec.test_frac = test_frac;
        spec.val_frac = val_frac;
        spec.seed = seed;
        spec.validate();
        return spec;
    }
    ordered_json json() const {
        return {{"mode", mode},
                {"train_frac", train_frac},
                {"test_frac", test_frac},
                {"val_frac", val_frac}};
    }
};

void add_split_options(CLI::App* cmd, SplitOpts& opts) {
    cmd->add_option("--split-mode", opts.mode, "random or chronological")
        ->capture_default_str();
    cmd->add_option("--train-frac", opts.train_frac, "training fraction")->capture_default_str();
    cmd->add_option("--test-frac", opts.test_frac, "test fraction")->capture_default_str();
    cmd->add_option("--val-frac", opts.val_frac, "validation fraction")->capture_default_str();
}

struct DataOpts {
    std::string data;
    std::string vocab;
    std::string glove;
    int embedding_dim = ts::kDefaultEmbeddingDim;

    ordered_json json() const {
        return {{"data", data},
                {"vocab", vocab},
                {"glove", glove},
                {"embedding_dim", embedding_dim}};
    }
};

void add_data_options(CLI::App* cmd, DataOpts& opts) {
    cmd->add_option("--data", opts.data, "dataset JSONL from prep")->required();
    cmd->add_option("--vocab", opts.vocab, "vocabulary file from prep")->required();
    cmd->add_option("--glove", opts.glove, "pretrained embedding text file; "
                                           "omit for seeded random embeddings");
    cmd->add_option("--embedding-dim", opts.embedding_dim, "embedding width")
        ->capture_default_str();
}

ts::EmbeddingMatrix make_embeddings(const DataOpts& opts, const ts::Vocabulary& vocab,
                                    std::uint64_t seed, ordered_json& info) {
    if (opts.glove.empty()) {
        info["pretrained"] = false;
        return ts::random_embeddings(vocab.size(), opts.embedding_dim,
                                     ts::derive_seed(seed, "embed"));
    }
    ts::GloveLoad load =
        ts::load_glove(opts.glove, vocab, ts::derive_seed(seed, "embed"), opts.embedding_dim);
    info["pretrained"] = true;
    info["found"] = load.found;
    info["coverage"] = load.coverage;
    return std::move(load.embeddings);
}

ordered_json manifest(std::uint64_t seed) {
    ordered_json j;
    j["version"] = ts::kVersion;
    j["seed"] = seed;
    return j;
}

// --- subcommand bodies -------------------------------------------------------

void cmd_prep(std::uint64_t seed, const std::string& out, const TweetOpts& tweet_opts,
              const std::string& prices_path, int split_size, int delay) {
    const auto outdir = ensure_outdir(out);
    const ts::TweetLoad tweets = ts::load_tweets(tweet_opts.path, tweet_opts.columns());
    const std::vector<ts::PriceBar> bars = ts::load_prices(prices_path);
    const ts::PrepResult prep = ts::prepare_dataset(tweets.tweets, bars, split_size, delay);

    ordered_json extras = manifest(seed);
    extras["split_size"] = split_size;
    extras["delay"] = delay;
    ts::save_dataset(outdir / "dataset.jsonl", prep.dataset, extras);
    ts::save_vocabulary(outdir / "vocabulary.txt", prep.vocabulary);

    ordered_json summary = manifest(seed);
    summary["config"] = tweet_opts.json();
    summary["config"]["prices"] = prices_path;
    summary["config"]["split_size"] = split_size;
    summary["config"]["delay"] = delay;
    summary["tweets_loaded"] = tweets.tweets.size();
    summary["tweets_skipped"] = tweets.skipped_rows;
    summary["days"] = prep.stats.day_count;
    summary["sequences"] = prep.stats.sequence_count;
    summary["padded_length"] = prep.stats.padded_length;
    summary["vocab_size"] = prep.stats.vocab_size;
    summary["subset_shortfall"] = prep.stats.shortfall;
    summary["class_distribution"] = distribution_json(ts::class_distribution(prep.dataset.sequences));
    write_json_file(outdir / "prep_summary.json", summary);

    std::cout << "prep: " << prep.stats.sequence_count << " sequences from "
              << prep.stats.day_count << " days, padded length " << prep.stats.padded_length
              << ", vocabulary " << prep.stats.vocab_size << "\n";
}

void cmd_sentiment(std::uint64_t seed, const std::string& out, const TweetOpts& tweet_opts,
                   const LexiconOpts& lexicon_opts, int bins) {
    const auto outdir = ensure_outdir(out);
    const ts::TweetLoad tweets = ts::load_tweets(tweet_opts.path, tweet_opts.columns());
    const ts::Lexicon lexicon = lexicon_opts.load();

    const std::vector<ts::ScoredTweet> scores = ts::score_tweets(tweets.tweets, lexicon);
    const std::vector<ts::DailySentiment> daily = ts::aggregate_daily(scores);
    ts::save_daily_sentiment(outdir / "daily_sentiment.csv", daily);
    ts::save_histogram_csv(outdir / "histogram.csv",
                           ts::score_histogram(daily, bins, ts::AggregateMode::simple));

    std::vector<double> means;
    means.reserve(daily.size());
    for (const ts::DailySentiment& day : daily) means.push_back(day.mean_compound);

    ordered_json summary = manifest(seed);
    summary["config"] = tweet_opts.json();
    summary["config"]["files"] = lexicon_opts.json();
    summary["config"]["bins"] = bins;
    summary["tweets_scored"] = scores.size();
    summary["tweets_skipped"] = tweets.skipped_rows;
    summary["days"] = daily.size();
    summary["daily_mean_distribution"] = summary_stats_json(means);
    write_json_file(outdir / "sentiment_summary.json", summary);

    std::cout << "sentiment: scored " << scores.size() << " tweets over " << daily.size()
              << " days\n";
}

void cmd_correlate(std::uint64_t seed, const std::string& out, const TweetOpts& tweet_opts,
                   const std::string& prices_path, const LexiconOpts& lexicon_opts,
                   const std::string& delays_text, int bins) {
    const auto outdir = ensure_outdir(out);
    const std::vector<int> delays = parse_delays(delays_text);
    const ts::TweetLoad tweets = ts::load_tweets(tweet_opts.path, tweet_opts.columns());
    const std::vector<ts::PriceBar> bars = ts::load_prices(prices_path);
    const ts::Lexicon lexicon = lexicon_opts.load();

    const std::vector<ts::ScoredTweet> scores = ts::score_tweets(tweets.tweets, lexicon);
    const std::vector<ts::DailySentiment> daily = ts::aggregate_daily(scores);
    ts::save_daily_sentiment(outdir / "daily_sentiment.csv", daily);
    ts::save_histogram_csv(outdir / "histogram.csv",
                           ts::score_histogram(daily, bins, ts::AggregateMode::simple));

    ordered_json report = manifest(seed);
    report["config"] = tweet_opts.json();
    report["config"]["prices"] = prices_path;
    report["config"]["files"] = lexicon_opts.json();
    report["config"]["delays"] = delays;
    report["config"]["bins"] = bins;
    report["days"] = daily.size();

    nlohmann::ordered_json all = nlohmann::ordered_json::array();
    for (const ts::AggregateMode mode :
         {ts::AggregateMode::simple, ts::AggregateMode::weighted}) {
        for (auto& row : ts::correlation_report_json(ts::delay_sweep(daily, bars, delays, mode)))
            all.push_back(row);
    }
    report["reports"] = std::move(all);

    std::vector<double> means;
    means.reserve(daily.size());
    for (const ts::DailySentiment& day : daily) means.push_back(day.mean_compound);
    report["daily_mean_distribution"] = summary_stats_json(means);
    write_json_file(outdir / "correlation.json", report);

    std::cout << "correlate: " << report["reports"].size() << " reports over " << daily.size()
              << " days\n";
}

struct LoadedData {
    ts::Dataset dataset;
    ts::Vocabulary vocab;
};

LoadedData load_data(const DataOpts& opts) {
    LoadedData out;
    out.dataset = ts::load_dataset(opts.data);
    out.vocab = ts::load_vocabulary(opts.vocab);
    return out;
}

void cmd_train(std::uint64_t seed, const std::string& out, const DataOpts& data_opts,
               const HpOpts& hp_opts, const SplitOpts& split_opts, bool eval_test) {
    const auto outdir = ensure_outdir(out);
    const LoadedData loaded = load_data(data_opts);
    const ts::Hyperparams hp = hp_opts.build();
    const ts::SplitResult split = ts::split_dataset(loaded.dataset, split_opts.build(seed));

    ordered_json embed_info;
    const ts::EmbeddingMatrix embeddings =
        make_embeddings(data_opts, loaded.vocab, seed, embed_info);

    ts::TrialResult trial =
        ts::train_model(split.train, split.validation, hp, embeddings, seed);
    if (eval_test) trial.test_metrics = ts::evaluate_model(*trial.best_model, split.test);
    ts::save_model(outdir / "model.ckpt", *trial.best_model);

    ordered_json report = manifest(seed);
    report["config"] = data_opts.json();
    report["config"]["split"] = split_opts.json();
    report["config"]["hyperparams"] = ts::hyperparams_json(hp);
    report["embeddings"] = embed_info;
    report["partition_sizes"] = {{"train", split.train.size()},
                                 {"test", split.test.size()},
                                 {"validation", split.validation.size()}};
    report["class_distribution"] = {
        {"train", distribution_json(ts::class_distribution(split.train))},
        {"test", distribution_json(ts::class_distribution(split.test))},
        {"validation", distribution_json(ts::class_distribution(split.validation))}};
    report["trial"] = ts::trial_json(trial);
    write_json_file(outdir / "trial.json", report);

    std::cout << "train: best validation accuracy " << trial.best_val_accuracy << " at epoch "
              << ts::join_epochs(trial.best_epochs);
    if (trial.test_metrics) std::cout << ", test accuracy " << trial.test_metrics->accuracy;
    std::cout << "\n";
}

void cmd_sweep(std::uint64_t seed, const std::string& out, const DataOpts& data_opts,
               const HpOpts& hp_opts, const SplitOpts& split_opts,
               const std::string& parameter, const std::vector<double>& values,
               const std::vector<std::string>& directions, const TweetOpts& tweet_opts,
               const std::string& prices_path, int delay) {
    const auto outdir = ensure_outdir(out);
    if (values.empty()) throw ts::DataError("sweep needs --values");

    if (parameter == "split") {
        if (tweet_opts.path.empty() || prices_path.empty())
            throw ts::DataError("split sweep needs --tweets and --prices");
        const ts::TweetLoad tweets = ts::load_tweets(tweet_opts.path, tweet_opts.columns());
        const std::vector<ts::PriceBar> bars = ts::load_prices(prices_path);
        const auto streams = ts::concat_by_day(tweets.tweets);
        const auto labels = ts::label_directions(bars, delay);
        const auto labeled = ts::label_streams(streams, labels);
        if (labeled.empty()) throw ts::DataError("no tweet days align with labeled trading days");
        std::vector<ts::TokenStream> kept;
        for (const auto& ls : labeled) kept.push_back(ls.stream);
        const ts::Vocabulary vocab = ts::build_vocabulary(kept);

        ordered_json embed_info;
        DataOpts embed_opts = data_opts;
        const ts::EmbeddingMatrix embeddings = make_embeddings(embed_opts, vocab, seed, embed_info);
        const ts::Hyperparams hp = hp_opts.build();

        std::ofstream csv(outdir / "split_sweep.csv", std::ios::binary);
        if (!csv) throw ts::IoError("cannot write split sweep table");
        csv << "split_size,accuracy\n";
        csv.precision(17);

        ordered_json trials = ordered_json::array();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const int k = static_cast<int>(values[i]);
            ts::Dataset dataset = ts::build_sequences(labeled, vocab, k);
            const ts::SplitResult split = ts::split_dataset(dataset, split_opts.build(seed));
            const ts::TrialResult trial =
                ts::train_model(split.train, split.validation, hp, embeddings,
                                ts::derive_seed(seed, "split-sweep", i),
                                /*keep_checkpoint=*/false);
            csv << k << ',' << trial.best_val_accuracy << '\n';
            ordered_json row = ts::trial_json(trial);
            row["split_size"] = k;
            trials.push_back(std::move(row));
        }

        ordered_json report = manifest(seed);
        report["config"] = tweet_opts.json();
        report["config"]["prices"] = prices_path;
        report["config"]["delay"] = delay;
        report["config"]["hyperparams"] = ts::hyperparams_json(hp);
        report["config"]["split"] = split_opts.json();
        report["embeddings"] = embed_info;
        report["trials"] = std::move(trials);
        write_json_file(outdir / "sweep.json", report);
        std::cout << "sweep: " << values.size() << " split sizes\n";
        return;
    }

    const ts::SweepParameter param = ts::parse_sweep_parameter(parameter);
    const LoadedData loaded = load_data(data_opts);
    const ts::SplitResult split = ts::split_dataset(loaded.dataset, split_opts.build(seed));
    ordered_json embed_info;
    const ts::EmbeddingMatrix embeddings =
        make_embeddings(data_opts, loaded.vocab, seed, embed_info);

    std::vector<ts::SweepTrial> all_trials;
    for (const std::string& direction : directions) {
        HpOpts base_opts = hp_opts;
        base_opts.direction = direction;
        const ts::Hyperparams base = base_opts.build();
        std::vector<ts::SweepTrial> trials =
            ts::sweep(param, values, base, split.train, split.validation, embeddings,
                      ts::derive_seed(seed, direction));
        for (auto& trial : trials) all_trials.push_back(std::move(trial));
    }
    ts::save_sweep_csv(outdir / "sweep.csv", all_trials);

    ordered_json report = manifest(seed);
    report["config"] = data_opts.json();
    report["config"]["parameter"] = parameter;
    report["config"]["values"] = values;
    report["config"]["directions"] = directions;
    report["config"]["base"] = ts::hyperparams_json(hp_opts.build());
    report["config"]["split"] = split_opts.json();
    report["embeddings"] = embed_info;
    ordered_json trials = ordered_json::array();
    for (const ts::SweepTrial& trial : all_trials) {
        ordered_json row;
        row["value"] = trial.value;
        row["direction"] = ts::direction_name(trial.hp.direction);
        if (trial.result) row["trial"] = ts::trial_json(*trial.result);
        else row["error"] = trial.error;
        trials.push_back(std::move(row));
    }
    report["trials"] = std::move(trials);
    write_json_file(outdir / "sweep.json", report);

    std::cout << "sweep: " << all_trials.size() << " trials over " << parameter << "\n";
}

void cmd_gridsearch(std::uint64_t seed, const std::string& out, int jobs,
                    const DataOpts& data_opts, const HpOpts& hp_opts,
                    const SplitOpts& split_opts, const std::vector<double>& dropouts,
                    const std::vector<int>& batches, const std::vector<int>& hiddens) {
    const auto outdir = ensure_outdir(out);
    const LoadedData loaded = load_data(data_opts);
    const ts::SplitResult split = ts::split_dataset(loaded.dataset, split_opts.build(seed));
    ordered_json embed_info;
    const ts::EmbeddingMatrix embeddings =
        make_embeddings(data_opts, loaded.vocab, seed, embed_info);

    ts::GridSpec grid;
    if (!dropouts.empty()) grid.dropouts = dropouts;
    if (!batches.empty()) grid.batch_sizes = batches;
    if (!hiddens.empty()) grid.hidden_sizes = hiddens;

    const int workers = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
    const ts::GridResult result =
        ts::grid_search(grid, hp_opts.build(), split.train, split.validation, split.test,
                        embeddings, seed, std::max(workers, 1));
    ts::save_model(outdir / "best_model.ckpt", *result.winner.best_model);

    ordered_json report = manifest(seed);
    report["config"] = data_opts.json();
    report["config"]["base"] = ts::hyperparams_json(hp_opts.build());
    report["config"]["split"] = split_opts.json();
    report["config"]["grid"] = {{"dropouts", grid.dropouts},
                                {"batches", grid.batch_sizes},
                                {"hiddens", grid.hidden_sizes}};
    report["embeddings"] = embed_info;
    report["best"] = ts::hyperparams_json(result.best);
    report["winner"] = ts::trial_json(result.winner);
    ordered_json ranked = ordered_json::array();
    for (const ts::GridEntry& entry : result.ranked) {
        ordered_json row;
        row["index"] = entry.index;
        row["dropout"] = entry.hp.dropout;
        row["batch_size"] = entry.hp.batch_size;
        row["hidden_units"] = entry.hp.hidden_units;
        if (entry.result) {
            row["val_accuracy"] = entry.result->best_val_accuracy;
            row["best_epochs"] = entry.result->best_epochs;
        } else {
            row["error"] = entry.error;
        }
        ranked.push_back(std::move(row));
    }
    report["ranked"] = std::move(ranked);
    write_json_file(outdir / "grid.json", report);

    std::ofstream csv(outdir / "grid.csv", std::ios::binary);
    if (!csv) throw ts::IoError("cannot write grid table");
    csv << "rank,dropout,batch_size,hidden_units,val_accuracy,best_epochs\n";
    csv.precision(17);
    std::size_t rank = 1;
    for (const ts::GridEntry& entry : result.ranked) {
        if (!entry.result) continue;
        csv << rank++ << ',' << entry.hp.dropout << ',' << entry.hp.batch_size << ','
            << entry.hp.hidden_units << ',' << entry.result->best_val_accuracy << ','
            << ts::join_epochs(entry.result->best_epochs) << '\n';
    }

    std::cout << "gridsearch: best (dropout " << result.best.dropout << ", batch "
              << result.best.batch_size << ", hidden " << result.best.hidden_units
              << ") validation accuracy " << result.winner.best_val_accuracy
              << ", test accuracy " << result.winner.test_metrics->accuracy << "\n";
}

void cmd_evaluate(std::uint64_t seed, const std::string& out, const std::string& model_path,
                  const std::string& data_path, const std::string& part,
                  const SplitOpts& split_opts) {
    const auto outdir = ensure_outdir(out);
    const ts::Model model = ts::load_model(model_path);
    const ts::Dataset dataset = ts::load_dataset(data_path);

    const std::vector<ts::LabeledSequence>* sequences = &dataset.sequences;
    ts::SplitResult split;
    if (part != "all") {
        split = ts::split_dataset(dataset, split_opts.build(seed));
        if (part == "train") sequences = &split.train;
        else if (part == "test") sequences = &split.test;
        else if (part == "validation") sequences = &split.validation;
        else throw ts::DataError("unknown partition: " + part);
    }
    const ts::Metrics metrics = ts::evaluate_model(model, *sequences);

    ordered_json report = manifest(seed);
    report["config"] = {{"model", model_path},
                        {"data", data_path},
                        {"partition", part},
                        {"split", split_opts.json()}};
    report["samples"] = sequences->size();
    report["metrics"] = ts::metrics_json(metrics);
    write_json_file(outdir / "metrics.json", report);

    std::cout << "evaluate: accuracy " << metrics.accuracy << " on " << sequences->size()
              << " samples\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tweet sentiment and stock direction toolkit"};
    app.set_config("--config", "", "key=value config file; flags take precedence");
    app.require_subcommand(1);
    app.fallthrough();

    std::uint64_t seed = 0;
    std::string out = ".";
    int jobs = 0;
    app.add_option("--seed", seed, "root seed for all randomness")->capture_default_str();
    app.add_option("--out", out, "output directory")->capture_default_str();
    app.add_option("--jobs", jobs, "worker threads (0 = all cores)")->capture_default_str();

    TweetOpts tweet_opts;
    LexiconOpts lexicon_opts;
    DataOpts data_opts;
    HpOpts hp_opts;
    SplitOpts split_opts;
    std::string prices_path;

    // prep
    auto* prep = app.add_subcommand("prep", "clean tweets, label days, encode sequences");
    int split_size = 150;
    int delay = 1;
    add_tweet_options(prep, tweet_opts);
    prep->add_option("--prices", prices_path, "daily close price CSV")->required();
    prep->add_option("--split-size", split_size, "subsets per day")->capture_default_str();
    prep->add_option("--delay", delay, "label delay in trading days")->capture_default_str();
    prep->callback([&] { cmd_prep(seed, out, tweet_opts, prices_path, split_size, delay); });

    // sentiment
    auto* sentiment = app.add_subcommand("sentiment", "score tweets and aggregate per day");
    int bins = 10;
    add_tweet_options(sentiment, tweet_opts);
    add_lexicon_options(sentiment, lexicon_opts);
    sentiment->add_option("--bins", bins, "histogram bins")->capture_default_str();
    sentiment->callback([&] { cmd_sentiment(seed, out, tweet_opts, lexicon_opts, bins); });

    // correlate
    auto* correlate =
        app.add_subcommand("correlate", "correlate daily sentiment with price direction");
    std::string delays_text = "1..7";
    add_tweet_options(correlate, tweet_opts);
    add_lexicon_options(correlate, lexicon_opts);
    correlate->add_option("--prices", prices_path, "daily close price CSV")->required();
    correlate->add_option("--delays", delays_text, "delays, e.g. 1..7 or 1,4")
        ->capture_default_str();
    correlate->add_option("--bins", bins, "histogram bins")->capture_default_str();
    correlate->callback([&] {
        cmd_correlate(seed, out, tweet_opts, prices_path, lexicon_opts, delays_text, bins);
    });

    // train
    auto* train = app.add_subcommand("train", "train a classifier on a prepared dataset");
    bool eval_test = false;
    add_data_options(train, data_opts);
    add_hp_options(train, hp_opts);
    add_split_options(train, split_opts);
    train->add_flag("--eval-test", eval_test, "evaluate the test partition after training");
    train->callback(
        [&] { cmd_train(seed, out, data_opts, hp_opts, split_opts, eval_test); });

    // sweep
    auto* sweep = app.add_subcommand("sweep", "vary one hyperparameter, all else fixed");
    std::string parameter;
    std::vector<double> values;
    std::vector<std::string> directions = {"uni", "bi"};
    sweep->add_option("--parameter", parameter, "dropout, batch, hidden, or split")->required();
    sweep->add_option("--values", values, "comma-separated values")
        ->required()
        ->delimiter(',');
    sweep->add_option("--directions", directions, "directions to sweep")
        ->delimiter(',')
        ->capture_default_str();
    add_data_options(sweep, data_opts);
    add_hp_options(sweep, hp_opts);
    add_split_options(sweep, split_opts);
    sweep->add_option("--tweets", tweet_opts.path, "tweet CSV (split sweep only)");
    sweep->add_option("--prices", prices_path, "price CSV (split sweep only)");
    sweep->add_option("--delay", delay, "label delay (split sweep only)")->capture_default_str();
    sweep->callback([&] {
        cmd_sweep(seed, out, data_opts, hp_opts, split_opts, parameter, values, directions,
                  tweet_opts, prices_path, delay);
    });

    // gridsearch
    auto* gridsearch = app.add_subcommand("gridsearch", "exhaustive hyperparameter search");
    std::vector<double> grid_dropouts;
    std::vector<int> grid_batches, grid_hiddens;
    add_data_options(gridsearch, data_opts);
    add_hp_options(gridsearch, hp_opts);
    add_split_options(gridsearch, split_opts);
    gridsearch->add_option("--dropouts", grid_dropouts, "dropout grid values")->delimiter(',');
    gridsearch->add_option("--batches", grid_batches, "batch size grid values")->delimiter(',');
    gridsearch->add_option("--hiddens", grid_hiddens, "hidden size grid values")->delimiter(',');
    gridsearch->callback([&] {
        cmd_gridsearch(seed, out, jobs, data_opts, hp_opts, split_opts, grid_dropouts,
                       grid_batches, grid_hiddens);
    });

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint against a dataset");
    std::string model_path;
    std::string partition = "all";
    evaluate->add_option("--model", model_path, "model checkpoint")->required();
    evaluate->add_option("--data", data_opts.data, "dataset JSONL")->required();
    evaluate->add_option("--partition", partition, "all, train, test, or validation")
        ->capture_default_str();
    add_split_options(evaluate, split_opts);
    evaluate->callback(
        [&] { cmd_evaluate(seed, out, model_path, data_opts.data, partition, split_opts); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ts::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ts::DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const ts::NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "testutil.hpp"
#include "tweetstock/textprep.hpp"
#include "tweetstock/train.hpp"

namespace ts = tweetstock;
using testutil::run_cli;
using testutil::TempDir;

namespace {

using Corpus = testutil::CorpusFiles;
using testutil::write_corpus;

nlohmann::json read_json(const std::filesystem::path& path) {
    return nlohmann::json::parse(testutil::read_file(path));
}

std::vector<std::string> prep_args(const Corpus& corpus, const std::string& outdir) {
    return {"prep",          "--tweets", corpus.tweets.string(), "--prices",
            corpus.prices.string(), "--out",    outdir,                 "--split-size",
            "2",             "--delay",  "1",                    "--seed",
            "11"};
}

/// Fast training flags shared by the train/sweep/gridsearch tests.
std::vector<std::string> small_net_args() {
    return {"--hidden", "4", "--epochs", "2", "--batch", "8",
            "--lr",     "0.05", "--dropout", "0.0", "--embedding-dim", "8"};
}

void append(std::vector<std::string>& args, const std::vector<std::string>& extra) {
    args.insert(args.end(), extra.begin(), extra.end());
}

} // namespace

TEST(Cli, PrintsHelp) {
    TempDir dir;
    const auto result = run_cli({"--help"}, dir);
    EXPECT_EQ(result.exit_code, 0);
    EXPECT_NE(result.output.find("prep"), std::string::npos);
    EXPECT_NE(result.output.find("gridsearch"), std::string::npos);
}

TEST(Cli, RejectsUnknownOptions) {
    TempDir dir;
    EXPECT_NE(run_cli({"prep", "--no-such-flag"}, dir).exit_code, 0);
    EXPECT_NE(run_cli({"frobnicate"}, dir).exit_code, 0);
}

TEST(Cli, MissingInputFileExitsTwo) {
    TempDir dir;
    const auto result = run_cli({"prep", "--tweets", dir.file("absent.csv").string(),
                                 "--prices", dir.file("absent2.csv").string(), "--out",
                                 dir.file("out").string()},
                                dir);
    EXPECT_EQ(result.exit_code, 2);
    EXPECT_NE(result.output.find("error:"), std::string::npos);
}

TEST(Cli, UnusableDataExitsThree) {
    TempDir dir;
    const auto tweets =
        dir.write("bad.csv", testutil::tweets_csv({"meaningless,hello,0", "also-bad,world,1"}));
    const auto prices = dir.write("prices.csv", testutil::prices_csv({"2016-01-04,100"}));
    const auto result = run_cli({"prep", "--tweets", tweets.string(), "--prices",
                                 prices.string(), "--out", dir.file("out").string()},
                                dir);
    EXPECT_EQ(result.exit_code, 3);
}

TEST(Cli, PrepWritesDatasetVocabularyAndSummary) {
    TempDir dir;
    const Corpus corpus = write_corpus(dir);
    const auto outdir = dir.file("prep");
    const auto result = run_cli(prep_args(corpus, outdir.string()), dir);
    ASSERT_EQ(result.exit_code, 0) << result.output;

    const ts::Dataset dataset = ts::load_dataset(outdir / "dataset.jsonl");
    EXPECT_EQ(dataset.sequences.size(), 22u); // 11 labeled days, two subsets each
    EXPECT_GT(dataset.padded_length, 0);

    const ts::Vocabulary vocab = ts::load_vocabulary(outdir / "vocabulary.txt");
    EXPECT_TRUE(vocab.index_of("good").has_value());

    const auto summary = read_json(outdir / "prep_summary.json");
    EXPECT_EQ(summary.at("days"), 11);
    EXPECT_EQ(summary.at("sequences"), 22);
    EXPECT_EQ(summary.at("vocab_size"), vocab.size());
    EXPECT_EQ(summary.at("seed"), 11);
    EXPECT_TRUE(summary.contains("class_distribution"));
}

TEST(Cli, SentimentWritesDailyScoresHistogramAndSummary) {
    TempDir dir;
    const Corpus corpus = write_corpus(dir);
    const auto lex = testutil::write_lexicon_files(dir);
    const auto outdir = dir.file("sent");
    const auto result = run_cli({"sentiment", "--tweets", corpus.tweets.string(), "--lexicon",
                                 lex.valence.string(), "--boosters", lex.boosters.string(),
                                 "--negations", lex.negations.string(), "--bins", "8", "--out",
                                 outdir.string()},
                                dir);
    ASSERT_EQ(result.exit_code, 0) << result.output;

    const auto daily = ts::load_daily_sentiment(outdir / "daily_sentiment.csv");
    EXPECT_EQ(daily.size(), 12u);

    const std::string histogram = testutil::read_file(outdir / "histogram.csv");
    EXPECT_NE(histogram.find("bin_start,bin_end,count"), std::string::npos);

    const auto summary = read_json(outdir / "sentiment_summary.json");
    EXPECT_EQ(summary.at("days"), 12);
    EXPECT_EQ(summary.at("tweets_scored"), 12);
    EXPECT_TRUE(summary.at("daily_mean_distribution").contains("mean"));
}

TEST(Cli, CorrelateReportsBothModesPerDelay) {
    TempDir dir;
    const Corpus corpus = write_corpus(dir);
    const auto lex = testutil::write_lexicon_files(dir);
    const auto outdir = dir.file("corr");
    const auto result =
        run_cli({"correlate", "--tweets", corpus.tweets.string(), "--prices",
                 corpus.prices.string(), "--lexicon", lex.valence.string(), "--boosters",
                 lex.boosters.string(), "--negations", lex.negations.string(), "--delays",
                 "1,2", "--out", outdir.string()},
                dir);
    ASSERT_EQ(result.exit_code, 0) << result.output;

    const auto report = read_json(outdir / "correlation.json");
    const auto& reports = report.at("reports");
    ASSERT_EQ(reports.size(), 4u); // two delays, simple and weighted
    EXPECT_EQ(reports[0].at("delay"), 1);
    EXPECT_EQ(reports[0].at("mode"), "simple");
    EXPECT_EQ(reports[2].at("mode"), "weighted");
    for (const auto& row : reports) {
        EXPECT_NE(row.contains("r_pb"), row.contains("warning"));
        EXPECT_TRUE(row.contains("n"));
    }
}

TEST(Cli, TrainEvaluateRoundTrip) {
    TempDir dir;
    const Corpus corpus = write_corpus(dir);
    const auto prepdir = dir.file("prep");
    ASSERT_EQ(run_cli(prep_args(corpus, prepdir.string()), dir).exit_code, 0);

    const auto traindir = dir.file("train");
    std::vector<std::string> train_args = {"train",
                                           "--data",
                                           (prepdir / "dataset.jsonl").string(),
                                           "--vocab",
                                           (prepdir / "vocabulary.txt").string(),
                                           "--out",
                                           traindir.string(),
                                           "--seed",
                                           "5",
                                           "--eval-test"};
    append(train_args, small_net_args());
    const auto train_result = run_cli(train_args, dir);
    ASSERT_EQ(train_result.exit_code, 0) << train_result.output;

    const auto trial = read_json(traindir / "trial.json");
    EXPECT_EQ(trial.at("seed"), 5);
    EXPECT_EQ(trial.at("trial").at("val_accuracy").size(), 2u);
    EXPECT_TRUE(trial.at("trial").contains("test_metrics"));
    EXPECT_EQ(trial.at("partition_sizes").at("train"), 16);
    EXPECT_EQ(trial.at("partition_sizes").at("test"), 4);
    EXPECT_EQ(trial.at("partition_sizes").at("validation"), 2);
    EXPECT_FALSE(trial.at("embeddings").at("pretrained").get<bool>());

    const auto evaldir = dir.file("eval");
    const auto eval_result = run_cli({"evaluate", "--model",
                                      (traindir / "model.ckpt").string(), "--data",
                                      (prepdir / "dataset.jsonl").string(), "--partition",
                                      "validation", "--seed", "5", "--out", evaldir.string()},
                                     dir);
    ASSERT_EQ(eval_result.exit_code, 0) << eval_result.output;
    const auto metrics = read_json(evaldir / "metrics.json");
    EXPECT_EQ(metrics.at("samples"), 2);
    EXPECT_TRUE(metrics.at("metrics").contains("accuracy"));

    const auto alldir = dir.file("eval_all");
    const auto all_result =
        run_cli({"evaluate", "--model", (traindir / "model.ckpt").string(), "--data",
                 (prepdir / "dataset.jsonl").string(), "--out", alldir.string()},
                dir);
    ASSERT_EQ(all_result.exit_code, 0) << all_result.output;
    EXPECT_EQ(read_json(alldir / "metrics.json").at("samples"), 22);
}

TEST(Cli, SweepWritesOneRowPerValueAndDirection) {
    TempDir dir;
    const Corpus corpus = write_corpus(dir);
    const auto prepdir = dir.file("prep");
    ASSERT_EQ(run_cli(prep_args(corpus, prepdir.string()), dir).exit_code, 0);

    const auto sweepdir = dir.file("sweep");
    std::vector<std::string> args = {"sweep",
                                     "--parameter",
                                     "dropout",
                                     "--values",
                                     "0.0,0.2",
                                     "--directions",
                                     "uni",
                                     "--data",
                                     (prepdir / "dataset.jsonl").string(),
                                     "--vocab",
                                     (prepdir / "vocabulary.txt").string(),
                                     "--out",
                                     sweepdir.string(),
                                     "--seed",
                                     "3"};
    append(args, small_net_args());
    const auto result = run_cli(args, dir);
    ASSERT_EQ(result.exit_code, 0) << result.output;

    const std::string csv = testutil::read_file(sweepdir / "sweep.csv");
    EXPECT_NE(csv.find("value,direction,val_accuracy,best_epochs,error\n"), std::string::npos);
    EXPECT_EQ(read_json(sweepdir / "sweep.json").at("trials").size(), 2u);
}

TEST(Cli, SplitSweepRebuildsSequencesPerSize) {
    TempDir dir;
    const Corpus corpus = write_corpus(dir);
    const auto sweepdir = dir.file("splitsweep");
    std::vector<std::string> args = {"sweep",  "--parameter", "split",
                                     "--values", "1,2",       "--tweets",
                                     corpus.tweets.string(),  "--prices",
                                     corpus.prices.string(),  "--delay",
                                     "1",      "--data",      "unused",
                                     "--vocab", "unused",     "--out",
                                     sweepdir.string(),       "--seed",
                                     "3"};
    append(args, small_net_args());
    const auto result = run_cli(args, dir);
    ASSERT_EQ(result.exit_code, 0) << result.output;

    const std::string csv = testutil::read_file(sweepdir / "split_sweep.csv");
    EXPECT_NE(csv.find("split_size,accuracy\n"), std::string::npos);
    EXPECT_NE(csv.find("\n1,"), std::string::npos);
    EXPECT_NE(csv.find("\n2,"), std::string::npos);
    EXPECT_EQ(read_json(sweepdir / "sweep.json").at("trials").size(), 2u);
}

TEST(Cli, GridSearchWritesRankingAndBestModel) {
    TempDir dir;
    const Corpus corpus = write_corpus(dir);
    const auto prepdir = dir.file("prep");
    ASSERT_EQ(run_cli(prep_args(corpus, prepdir.string()), dir).exit_code, 0);

    const auto griddir = dir.file("grid");
    std::vector<std::string> args = {"gridsearch",
                                     "--data",
                                     (prepdir / "dataset.jsonl").string(),
                                     "--vocab",
                                     (prepdir / "vocabulary.txt").string(),
                                     "--dropouts",
                                     "0.0",
                                     "--batches",
                                     "8,16",
                                     "--hiddens",
                                     "4",
                                     "--out",
                                     griddir.string(),
                                     "--seed",
                                     "3",
                                     "--jobs",
                                     "2"};
    append(args, small_net_args());
    const auto result = run_cli(args, dir);
    ASSERT_EQ(result.exit_code, 0) << result.output;

    const auto grid = read_json(griddir / "grid.json");
    EXPECT_EQ(grid.at("ranked").size(), 2u);
    EXPECT_TRUE(grid.at("winner").contains("test_metrics"));

    const std::string csv = testutil::read_file(griddir / "grid.csv");
    EXPECT_NE(csv.find("rank,dropout,batch_size,hidden_units,val_accuracy,best_epochs\n"),
              std::string::npos);

    const ts::Model best = ts::load_model(griddir / "best_model.ckpt");
    EXPECT_EQ(best.config.hidden_units, 4);
}

TEST(Cli, ConfigFileSuppliesDefaults) {
    TempDir dir;
    const Corpus corpus = write_corpus(dir);
    const auto outdir = dir.file("prep");
    const auto config = dir.write("run.ini",
                                  "[prep]\n"
                                  "tweets=\"" + corpus.tweets.string() + "\"\n" +
                                      "prices=\"" + corpus.prices.string() + "\"\n" +
                                      "split-size=2\n");
    const auto result = run_cli(
        {"prep", "--config", config.string(), "--out", outdir.string(), "--seed", "11"}, dir);
    ASSERT_EQ(result.exit_code, 0) << result.output;
    EXPECT_EQ(read_json(outdir / "prep_summary.json").at("sequences"), 22);
}

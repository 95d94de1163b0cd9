#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tweetstock/embed.hpp"
#include "tweetstock/error.hpp"
#include "tweetstock/net.hpp"
#include "tweetstock/rng.hpp"
#include "tweetstock/textprep.hpp"

namespace tweetstock {

// --- dataset splitting -------------------------------------------------------

enum class SplitMode { random, chronological };

inline SplitMode parse_split_mode(std::string_view name) {
    if (name == "random") return SplitMode::random;
    if (name == "chronological") return SplitMode::chronological;
    throw DataError("unknown split mode: " + std::string(name));
}

inline const char* split_mode_name(SplitMode mode) {
    return mode == SplitMode::random ? "random" : "chronological";
}

struct SplitSpec {
    double train_frac = 0.70;
    double test_frac = 0.20;
    double val_frac = 0.10;
    SplitMode mode = SplitMode::random;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(train_frac > 0.0 && test_frac > 0.0 && val_frac > 0.0))
            throw DataError("split fractions must all be positive");
        if (std::abs(train_frac + test_frac + val_frac - 1.0) > 1e-9)
            throw DataError("split fractions must sum to 1");
    }
};

struct SplitResult {
    std::vector<LabeledSequence> train;
    std::vector<LabeledSequence> test;
    std::vector<LabeledSequence> validation;
};

/// Partitions sequences into train/test/validation. Test and validation
/// sizes are floored from their fractions and the remainder goes to
/// train. Random mode seed-shuffles before cutting; chronological mode
/// cuts in (date, subset) order, earliest first.
inline SplitResult split_dataset(const Dataset& dataset, const SplitSpec& spec) {
    spec.validate();
    const std::size_t n = dataset.sequences.size();
    const std::size_t n_test = static_cast<std::size_t>(spec.test_frac * static_cast<double>(n));
    const std::size_t n_val = static_cast<std::size_t>(spec.val_frac * static_cast<double>(n));
    if (n_test + n_val >= n)
        throw DataError("dataset of " + std::to_string(n) + " sequences leaves an empty partition");
    const std::size_t n_train = n - n_test - n_val;
    if (n_train == 0 || n_test == 0 || n_val == 0)
        throw DataError("dataset of " + std::to_string(n) + " sequences leaves an empty partition");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (spec.mode == SplitMode::random) {
        Rng rng(derive_seed(spec.seed, "split"));
        rng.shuffle(order);
    } else {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const LabeledSequence& sa = dataset.sequences[a];
            const LabeledSequence& sb = dataset.sequences[b];
            if (sa.source_date != sb.source_date) return sa.source_date < sb.source_date;
            return sa.subset_index < sb.subset_index;
        });
    }

    SplitResult out;
    out.train.reserve(n_train);
    out.test.reserve(n_test);
    out.validation.reserve(n_val);
    for (std::size_t i = 0; i < n; ++i) {
        const LabeledSequence& seq = dataset.sequences[order[i]];
        if (i < n_train) out.train.push_back(seq);
        else if (i < n_train + n_test) out.test.push_back(seq);
        else out.validation.push_back(seq);
    }
    return out;
}

struct ClassDistribution {
    long counts[2] = {0, 0};
    double fractions[2] = {0.0, 0.0};
};

inline ClassDistribution class_distribution(const std::vector<LabeledSequence>& sequences) {
    if (sequences.empty()) throw DataError("class distribution needs a non-empty dataset");
    ClassDistribution dist;
    for (const LabeledSequence& seq : sequences) {
        if (seq.label != 0 && seq.label != 1)
            throw DataError("label must be 0 or 1, got " + std::to_string(seq.label));
        ++dist.counts[seq.label];
    }
    const double n = static_cast<double>(sequences.size());
    dist.fractions[0] = static_cast<double>(dist.counts[0]) / n;
    dist.fractions[1] = static_cast<double>(dist.counts[1]) / n;
    return dist;
}

// --- metrics -------------------------------------------------------------------

struct Confusion {
    long tp = 0;
    long fp = 0;
    long tn = 0;
    long fn = 0;
};

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    Confusion confusion;
    bool degenerate = false; // some metric had a zero denominator and reports 0
};

inline Metrics metrics_from_confusion(const Confusion& c) {
    const long total = c.tp + c.fp + c.tn + c.fn;
    if (total < 1) throw DataError("metrics need at least one prediction");
    Metrics m;
    m.confusion = c;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
    if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    else m.degenerate = true;
    if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    else m.degenerate = true;
    if (m.precision + m.recall > 0.0)
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    else m.degenerate = true;
    return m;
}

/// Threshold-0.5 classification of every sequence against its label.
inline Metrics evaluate_model(const Model& model, const std::vector<LabeledSequence>& sequences) {
    if (sequences.empty()) throw DataError("evaluation needs a non-empty dataset");
    Confusion c;
    for (const LabeledSequence& seq : sequences) {
        const int predicted = classify(predict(model, seq.indices));
        if (seq.label == 1) (predicted == 1 ? c.tp : c.fn)++;
        else (predicted == 1 ? c.fp : c.tn)++;
    }
    return metrics_from_confusion(c);
}

// --- training loop --------------------------------------------------------------

struct Hyperparams {
    double dropout = 0.2;
    int batch_size = 32;
    int hidden_units = 100;
    Direction direction = Direction::uni;
    int num_layers = 1;
    double learning_rate = 0.001;
    int epochs = 10;
    bool forget_bias_one = false;

    void validate() const {
        if (batch_size < 1) throw DataError("batch size must be >= 1");
        if (epochs < 1) throw DataError("epoch count must be >= 1");
        if (!(learning_rate > 0.0)) throw DataError("learning rate must be positive");
        NetConfig probe{hidden_units, dropout, direction, num_layers, 0, forget_bias_one};
        probe.validate();
    }
};

struct TrialResult {
    Hyperparams hp;
    std::uint64_t seed = 0;
    std::vector<double> val_accuracy;  // one entry per epoch
    std::vector<double> train_loss;    // mean batch loss per epoch
    std::vector<int> best_epochs;      // 1-based epochs tied at the maximum
    double best_val_accuracy = 0.0;
    std::optional<Model> best_model;   // snapshot at the first best epoch
    std::optional<Metrics> test_metrics;
};

/// Mini-batch SGD over `train` with a validation pass after every epoch.
/// All randomness (init, epoch shuffles, dropout masks) derives from
/// `seed`. The checkpoint kept is the model at the first epoch reaching
/// the best validation accuracy.
inline TrialResult train_model(const std::vector<LabeledSequence>& train,
                               const std::vector<LabeledSequence>& validation,
                               const Hyperparams& hp, const EmbeddingMatrix& embeddings,
                               std::uint64_t seed, bool keep_checkpoint = true) {
    hp.validate();
    if (train.empty()) throw DataError("training set is empty");
    if (validation.empty()) throw DataError("validation set is empty");

    NetConfig config{hp.hidden_units, hp.dropout, hp.direction,
                     hp.num_layers,   seed,       hp.forget_bias_one};
    Model model = init_model(config, embeddings);

    TrialResult result;
    result.hp = hp;
    result.seed = seed;

    Rng dropout_rng(derive_seed(seed, "dropout"));
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    const std::size_t batch_size = static_cast<std::size_t>(hp.batch_size);
    std::vector<const LabeledSequence*> batch;
    std::vector<DropoutPlan> plans;

    for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
        Rng epoch_rng(derive_seed(seed, "epoch-order", static_cast<std::uint64_t>(epoch)));
        epoch_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t end = std::min(start + batch_size, order.size());
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(&train[order[i]]);

            const std::vector<DropoutPlan>* plan_ptr = nullptr;
            if (hp.dropout > 0.0) {
                plans.clear();
                for (const LabeledSequence* seq : batch)
                    plans.push_back(make_dropout_plan(model, seq->indices.size(), dropout_rng));
                plan_ptr = &plans;
            }

            ++batches;
            try {
                const BatchResult step = batch_gradients(model, batch, plan_ptr);
                if (!std::isfinite(step.loss))
                    throw NumericError("non-finite loss");
                loss_sum += step.loss;
                sgd_step(model, step.grads, hp.learning_rate);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batches));
            }
        }
        result.train_loss.push_back(loss_sum / static_cast<double>(batches));

        const double accuracy = evaluate_model(model, validation).accuracy;
        result.val_accuracy.push_back(accuracy);
        if (result.best_epochs.empty() || accuracy > result.best_val_accuracy) {
            result.best_val_accuracy = accuracy;
            result.best_epochs.assign(1, epoch);
            if (keep_checkpoint) result.best_model = model;
        } else if (accuracy == result.best_val_accuracy) {
            result.best_epochs.push_back(epoch);
        }
    }
    return result;
}

// --- single-parameter sweeps ------------------------------------------------------

enum class SweepParameter { dropout, batch, hidden };

inline SweepParameter parse_sweep_parameter(std::string_view name) {
    if (name == "dropout") return SweepParameter::dropout;
    if (name == "batch") return SweepParameter::batch;
    if (name == "hidden") return SweepParameter::hidden;
    throw DataError("unknown sweep parameter: " + std::string(name));
}

inline const char* sweep_parameter_name(SweepParameter p) {
    switch (p) {
        case SweepParameter::dropout: return "dropout";
        case SweepParameter::batch: return "batch";
        default: return "hidden";
    }
}

inline Hyperparams with_parameter(Hyperparams hp, SweepParameter param, double value) {
    switch (param) {
        case SweepParameter::dropout: hp.dropout = value; break;
        case SweepParameter::batch: hp.batch_size = static_cast<int>(value); break;
        case SweepParameter::hidden: hp.hidden_units = static_cast<int>(value); break;
    }
    return hp;
}

struct SweepTrial {
    double value = 0.0;
    Hyperparams hp;
    std::optional<TrialResult> result; // empty when the trial failed
    std::string error;
};

/// One trial per value, everything else held at the base configuration.
/// A failing trial is recorded with its error and the sweep continues.
inline std::vector<SweepTrial> sweep(SweepParameter param, const std::vector<double>& values,
                                     const Hyperparams& base,
                                     const std::vector<LabeledSequence>& train,
                                     const std::vector<LabeledSequence>& validation,
                                     const EmbeddingMatrix& embeddings, std::uint64_t seed) {
    if (values.empty()) throw DataError("sweep needs at least one value");
    std::vector<SweepTrial> trials;
    trials.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        SweepTrial trial;
        trial.value = values[i];
        trial.hp = with_parameter(base, param, values[i]);
        try {
            trial.result = train_model(train, validation, trial.hp, embeddings,
                                       derive_seed(seed, "sweep", i),
                                       /*keep_checkpoint=*/false);
        } catch (const std::exception& e) {
            trial.error = e.what();
        }
        trials.push_back(std::move(trial));
    }
    return trials;
}

// --- grid search -----------------------------------------------------------------

struct GridSpec {
    std::vector<double> dropouts = {0.2, 0.3, 0.4, 0.5, 0.6};
    std::vector<int> batch_sizes = {8, 16, 32, 64, 128};
    std::vector<int> hidden_sizes = {100, 128, 256, 512};
};

struct GridEntry {
    std::size_t index = 0; // position in the Cartesian enumeration
    Hyperparams hp;
    std::optional<TrialResult> result;
    std::string error;
};

struct GridResult {
    std::vector<GridEntry> ranked; // successes by rank, then failures by index
    Hyperparams best;
    TrialResult winner; // retrained best combination, test metrics filled
};

/// Exhaustive Cartesian product, optionally across worker threads. Each
/// combination trains with a seed derived from its enumeration index, so
/// results do not depend on scheduling. Ranking is by validation accuracy,
/// ties broken toward smaller hidden size, then larger dropout, then
/// smaller batch. The winner is retrained (same derived seed) to produce
/// its checkpoint and the single test-set evaluation.
inline GridResult grid_search(const GridSpec& grid, const Hyperparams& base,
                              const std::vector<LabeledSequence>& train,
                              const std::vector<LabeledSequence>& validation,
                              const std::vector<LabeledSequence>& test,
                              const EmbeddingMatrix& embeddings, std::uint64_t seed,
                              int jobs = 1) {
    if (grid.dropouts.empty() || grid.batch_sizes.empty() || grid.hidden_sizes.empty())
        throw DataError("grid needs at least one value per hyperparameter");

    std::vector<GridEntry> entries;
    entries.reserve(grid.dropouts.size() * grid.batch_sizes.size() * grid.hidden_sizes.size());
    for (double dropout : grid.dropouts)
        for (int batch : grid.batch_sizes)
            for (int hidden : grid.hidden_sizes) {
                GridEntry& entry = entries.emplace_back();
                entry.index = entries.size() - 1;
                entry.hp = base;
                entry.hp.dropout = dropout;
                entry.hp.batch_size = batch;
                entry.hp.hidden_units = hidden;
            }

    const auto run_trial = [&](GridEntry& entry) {
        try {
            entry.result = train_model(train, validation, entry.hp, embeddings,
                                       derive_seed(seed, "grid", entry.index),
                                       /*keep_checkpoint=*/false);
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
    };

    const int workers = std::clamp(jobs, 1, static_cast<int>(entries.size()));
    if (workers == 1) {
        for (GridEntry& entry : entries) run_trial(entry);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < entries.size();
                     i = next.fetch_add(1))
                    run_trial(entries[i]);
            });
        for (std::thread& t : pool) t.join();
    }

    std::vector<std::size_t> success, failed;
    for (std::size_t i = 0; i < entries.size(); ++i)
        (entries[i].result ? success : failed).push_back(i);
    if (success.empty()) throw DataError("every grid combination failed");

    std::sort(success.begin(), success.end(), [&](std::size_t a, std::size_t b) {
        const GridEntry& ea = entries[a];
        const GridEntry& eb = entries[b];
        if (ea.result->best_val_accuracy != eb.result->best_val_accuracy)
            return ea.result->best_val_accuracy > eb.result->best_val_accuracy;
        if (ea.hp.hidden_units != eb.hp.hidden_units) return ea.hp.hidden_units < eb.hp.hidden_units;
        if (ea.hp.dropout != eb.hp.dropout) return ea.hp.dropout > eb.hp.dropout;
        if (ea.hp.batch_size != eb.hp.batch_size) return ea.hp.batch_size < eb.hp.batch_size;
        return ea.index < eb.index;
    });

    GridResult out;
    const GridEntry& best_entry = entries[success.front()];
    out.best = best_entry.hp;

    out.winner = train_model(train, validation, out.best, embeddings,
                             derive_seed(seed, "grid", best_entry.index),
                             /*keep_checkpoint=*/true);
    out.winner.test_metrics = evaluate_model(*out.winner.best_model, test);

    out.ranked.reserve(entries.size());
    for (std::size_t i : success) out.ranked.push_back(entries[i]);
    for (std::size_t i : failed) out.ranked.push_back(entries[i]);
    return out;
}

// --- reports ----------------------------------------------------------------------

inline nlohmann::ordered_json hyperparams_json(const Hyperparams& hp) {
    nlohmann::ordered_json j;
    j["dropout"] = hp.dropout;
    j["batch_size"] = hp.batch_size;
    j["hidden_units"] = hp.hidden_units;
    j["direction"] = direction_name(hp.direction);
    j["num_layers"] = hp.num_layers;
    j["learning_rate"] = hp.learning_rate;
    j["epochs"] = hp.epochs;
    j["forget_bias_one"] = hp.forget_bias_one;
    return j;
}

inline nlohmann::ordered_json metrics_json(const Metrics& m) {
    nlohmann::ordered_json j;
    j["accuracy"] = m.accuracy;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["confusion"] = {{"tp", m.confusion.tp},
                      {"fp", m.confusion.fp},
                      {"tn", m.confusion.tn},
                      {"fn", m.confusion.fn}};
    if (m.degenerate) j["degenerate"] = true;
    return j;
}

inline nlohmann::ordered_json trial_json(const TrialResult& trial) {
    nlohmann::ordered_json j;
    j["hyperparams"] = hyperparams_json(trial.hp);
    j["seed"] = trial.seed;
    j["val_accuracy"] = trial.val_accuracy;
    j["train_loss"] = trial.train_loss;
    j["best_epochs"] = trial.best_epochs;
    j["best_val_accuracy"] = trial.best_val_accuracy;
    if (trial.test_metrics) j["test_metrics"] = metrics_json(*trial.test_metrics);
    return j;
}

inline std::string join_epochs(const std::vector<int>& epochs) {
    std::string out;
    for (std::size_t i = 0; i < epochs.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(epochs[i]);
    }
    return out;
}

/// Summary table: one `value,direction,val_accuracy,best_epochs` row per
/// trial; failed trials carry an error column instead of numbers.
inline void save_sweep_csv(const std::filesystem::path& path,
                           const std::vector<SweepTrial>& trials) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write sweep table: " + path.string());
    out << "value,direction,val_accuracy,best_epochs,error\n";
    out.precision(17);
    for (const SweepTrial& trial : trials) {
        out << trial.value << ',' << direction_name(trial.hp.direction) << ',';
        if (trial.result) {
            out << trial.result->best_val_accuracy << ','
                << join_epochs(trial.result->best_epochs) << ",\n";
        } else {
            std::string error = trial.error;
            std::replace(error.begin(), error.end(), ',', ';');
            out << ",," << error << '\n';
        }
    }
}

} // namespace tweetstock

// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.
//
// Training protocol: Adam with cross-entropy, learning rate halved when the
// training loss fails to decrease for two consecutive epochs, k-fold cross
// validation with repeated seeded runs, and machine-readable reports.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mcta/adam.hpp"
#include "mcta/dataset.hpp"
#include "mcta/errors.hpp"
#include "mcta/feature_store.hpp"
#include "mcta/model.hpp"
#include "mcta/ops.hpp"
#include "mcta/parallel.hpp"
#include "mcta/rng.hpp"

namespace mcta {

struct TrainConfig {
    double lr_init = 0.001;
    double lr_decay = 0.5;
    int batch_size = 50;
    int epochs = 50;
    int repeats = 5;
    std::uint64_t seed = 1234;
    // When > 0, stop a run early once training accuracy reaches the target
    // (checked per epoch, which costs one extra pass over the training set).
    double stop_at_train_accuracy = 0.0;

    void validate() const {
        if (batch_size < 1) throw InvalidInputError("train: batch_size must be >= 1");
        if (epochs < 1) throw InvalidInputError("train: epochs must be >= 1");
        if (repeats < 1) throw InvalidInputError("train: repeats must be >= 1");
        if (lr_init <= 0 || lr_decay <= 0 || lr_decay > 1) {
            throw InvalidInputError("train: lr_init must be > 0 and lr_decay in (0, 1]");
        }
    }
};

struct Example {
    const FeatureInput* features = nullptr;
    std::int64_t label = 0;
    std::string id;
};

// One (fold, repeat) training run.
struct FoldRun {
    int fold = 0;
    int repeat = 0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    std::vector<double> loss_history;        // mean training loss per epoch
    std::vector<double> lr_trace;            // learning rate used in each epoch
    std::vector<std::string> batch_log;      // per-epoch hash of the batch id sequence
    std::vector<double> train_accuracy;      // per epoch, only when tracked
    double wall_seconds = 0.0;
};

struct RunReport {
    std::string mode;
    std::map<std::string, std::string> config_echo;
    std::string config_hash;
    std::int64_t param_count = 0;
    std::vector<FoldRun> runs;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;  // sample std over repeat-level CV means
    double wall_seconds = 0.0;
};

// Halve the rate only after two consecutive epochs without a decrease.
inline double lr_update(const std::vector<double>& loss_history, double current_lr, double decay = 0.5) {
    if (loss_history.empty()) throw InvalidInputError("lr_update: empty loss history");
    const std::size_t e = loss_history.size() - 1;
    if (e < 2) return current_lr;
    if (loss_history[e] >= loss_history[e - 1] && loss_history[e - 1] >= loss_history[e - 2]) {
        return current_lr * decay;
    }
    return current_lr;
}

namespace detail {

template <class T>
TensorPtr<T> assemble_batch(const std::vector<Example>& examples, const std::vector<std::size_t>& order,
                            std::size_t begin, std::size_t end, std::vector<std::int64_t>* labels,
                            std::string* id_log) {
    const FeatureInput& first = *examples[order[begin]].features;
    const std::int64_t t = first.frames, f = first.mel_bins;
    const auto bsz = static_cast<std::int64_t>(end - begin);
    auto x = Tensor<T>::zeros({bsz, 3, t, f});
    labels->clear();
    for (std::size_t i = begin; i < end; ++i) {
        const Example& ex = examples[order[i]];
        if (ex.features->frames != t || ex.features->mel_bins != f) {
            throw InvalidInputError("train: clip '" + ex.id + "' has " + std::to_string(ex.features->frames) +
                                    " frames, batch expects " + std::to_string(t));
        }
        T* dst = x->data().data() + static_cast<std::int64_t>(i - begin) * 3 * t * f;
        for (std::size_t j = 0; j < ex.features->data.size(); ++j) {
            dst[j] = static_cast<T>(ex.features->data[j]);
        }
        labels->push_back(ex.label);
        if (id_log) {
            *id_log += ex.id;
            id_log->push_back(';');
        }
    }
    return x;
}

inline std::string hash_hex(const std::string& s) {
    std::ostringstream os;
    os << std::hex << fnv1a64(s);
    return os.str();
}

}  // namespace detail

template <class T>
double evaluate(MctaModel<T>& model, const std::vector<Example>& data, int batch_size = 50) {
    if (data.empty()) throw InvalidInputError("evaluate: empty data");
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::size_t correct = 0;
    std::vector<std::int64_t> labels;
    for (std::size_t begin = 0; begin < data.size(); begin += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(data.size(), begin + static_cast<std::size_t>(batch_size));
        auto x = detail::assemble_batch<T>(data, order, begin, end, &labels, nullptr);
        auto logits = model.infer(x);
        const std::int64_t k = logits->dim(1);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const T* row = logits->data().data() + static_cast<std::int64_t>(i) * k;
            std::int64_t best = 0;
            for (std::int64_t j = 1; j < k; ++j) {
                if (row[j] > row[best]) best = j;
            }
            correct += best == labels[i];
        }
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

// Trains one fold: epochs x shuffled minibatches of Adam on cross-entropy.
template <class T>
std::pair<MctaModel<T>, FoldRun> train_fold(const std::vector<Example>& train,
                                            const std::vector<Example>& val, const ModelConfig& model_cfg,
                                            const TrainConfig& train_cfg, std::uint64_t seed) {
    train_cfg.validate();
    if (train.empty() || val.empty()) {
        throw InvalidInputError("train_fold: train and validation splits must be non-empty");
    }
    const auto start = std::chrono::steady_clock::now();

    MctaModel<T> model(model_cfg, derive_seed(seed, "init"));
    Rng shuffle_rng(derive_seed(seed, "shuffle"));
    Rng dropout_rng(derive_seed(seed, "dropout"));
    auto params = model.parameters();
    std::vector<AdamState<T>> states;
    states.reserve(params.size());
    for (auto& p : params) states.push_back(AdamState<T>::make(p->size()));

    FoldRun run;
    run.seed = seed;
    double lr = train_cfg.lr_init;
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        std::string id_log;
        double loss_sum = 0.0;
        std::vector<std::int64_t> labels;
        for (std::size_t begin = 0; begin < train.size();
             begin += static_cast<std::size_t>(train_cfg.batch_size)) {
            const std::size_t end =
                std::min(train.size(), begin + static_cast<std::size_t>(train_cfg.batch_size));
            auto x = detail::assemble_batch<T>(train, order, begin, end, &labels, &id_log);
            auto logits = model.forward(x, Phase::Train, dropout_rng);
            auto loss = softmax_cross_entropy(logits, labels);
            loss->backward();
            // Parameters detached from the graph in some modes (e.g. the
            // unshared attention conv under NoAttention) carry zero grads.
            for (auto& p : params) p->grad();
            adam_step(params, states, static_cast<T>(lr));
            loss_sum += static_cast<double>(loss->item()) * static_cast<double>(end - begin);
        }
        run.loss_history.push_back(loss_sum / static_cast<double>(train.size()));
        run.lr_trace.push_back(lr);
        run.batch_log.push_back(detail::hash_hex(id_log));
        lr = lr_update(run.loss_history, lr, train_cfg.lr_decay);
        if (train_cfg.stop_at_train_accuracy > 0.0) {
            const double train_acc = evaluate(model, train, train_cfg.batch_size);
            run.train_accuracy.push_back(train_acc);
            if (train_acc >= train_cfg.stop_at_train_accuracy) break;
        }
    }
    run.accuracy = evaluate(model, val, train_cfg.batch_size);
    run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(model), std::move(run)};
}

// ---------------------------------------------------------------------------
// Cross-validation

struct CvOptions {
    int jobs = 1;
    // When set, the model of the first (fold, repeat) run is saved here.
    std::string checkpoint_path;
};

namespace detail {

struct FoldSplit {
    std::vector<Example> train;
    std::vector<Example> eval;
};

// Held-out fold is evaluated on originals only; training uses every row of
// the remaining folds (originals plus their augmented variants).
inline FoldSplit split_fold(const Manifest& manifest, const FeatureStore& store, int held_out) {
    FoldSplit split;
    std::unordered_set<std::string> eval_sources;
    for (const auto& row : manifest.rows) {
        auto it = store.find(row.id);
        if (it == store.end()) throw StateError("cross_validate: no features for clip '" + row.id + "'");
        Example ex{&it->second, row.label, row.id};
        if (row.fold == held_out) {
            if (row.variant_kind == VariantKind::Original) {
                split.eval.push_back(std::move(ex));
                eval_sources.insert(row.id);
            }
        } else {
            split.train.push_back(std::move(ex));
        }
    }
    // Leak check: no training row may descend from a held-out original.
    for (const auto& row : manifest.rows) {
        if (row.fold != held_out && eval_sources.count(row.source_id)) {
            throw StateError("cross_validate: augmented variant '" + row.id +
                             "' of held-out clip leaked into the training split");
        }
    }
    return split;
}

}  // namespace detail

template <class T>
RunReport cross_validate(const Manifest& manifest, const FeatureStore& store, const ModelConfig& model_cfg,
                         const TrainConfig& train_cfg, const CvOptions& options = {}) {
    train_cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    auto folds = manifest.folds();
    if (folds.empty()) throw InvalidInputError("cross_validate: manifest has no rows");
    for (int f : folds) {
        bool any = false;
        for (const auto& r : manifest.rows) {
            any |= r.fold == f && r.variant_kind == VariantKind::Original;
        }
        if (!any) {
            throw InvalidInputError("cross_validate: fold " + std::to_string(f) + " has zero original samples");
        }
    }

    RunReport report;
    report.mode = to_string(model_cfg.attention_mode);
    {
        MctaModel<T> probe(model_cfg, 0);
        report.param_count = probe.param_count();
    }

    struct Job {
        int fold;
        int repeat;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (int i = 0; i < train_cfg.repeats; ++i) {
        for (int f : folds) {
            // Paper protocol: run i uses base seed + i; folds get distinct
            // derived streams within the run.
            jobs.push_back({f, i, derive_seed(train_cfg.seed + static_cast<std::uint64_t>(i),
                                              "fold" + std::to_string(f))});
        }
    }
    std::vector<FoldRun> runs(jobs.size());
    parallel_for(static_cast<std::int64_t>(jobs.size()), options.jobs, [&](std::int64_t ji) {
        const Job& job = jobs[static_cast<std::size_t>(ji)];
        auto split = detail::split_fold(manifest, store, job.fold);
        auto [model, run] = train_fold<T>(split.train, split.eval, model_cfg, train_cfg, job.seed);
        run.fold = job.fold;
        run.repeat = job.repeat;
        runs[static_cast<std::size_t>(ji)] = std::move(run);
        if (ji == 0 && !options.checkpoint_path.empty()) {
            save_checkpoint(options.checkpoint_path, model);
        }
    });
    report.runs = std::move(runs);

    // Mean and sample std over repeat-level CV accuracies.
    std::vector<double> cv_means(static_cast<std::size_t>(train_cfg.repeats), 0.0);
    for (std::size_t ji = 0; ji < jobs.size(); ++ji) {
        cv_means[static_cast<std::size_t>(jobs[ji].repeat)] += report.runs[ji].accuracy;
    }
    for (auto& v : cv_means) v /= static_cast<double>(folds.size());
    double mean = 0.0;
    for (double v : cv_means) mean += v;
    mean /= static_cast<double>(cv_means.size());
    double var = 0.0;
    for (double v : cv_means) var += (v - mean) * (v - mean);
    report.mean_accuracy = mean;
    report.std_accuracy = cv_means.size() > 1 ? std::sqrt(var / static_cast<double>(cv_means.size() - 1)) : 0.0;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

// Runs cross-validation once per attention mode with identical seeds and
// data order, asserting that every mode consumed identical batch sequences.
template <class T>
std::vector<RunReport> ablation(const Manifest& manifest, const FeatureStore& store,
                                const ModelConfig& base_cfg, const TrainConfig& train_cfg,
                                const std::vector<AttentionMode>& modes, const CvOptions& options = {}) {
    std::vector<RunReport> reports;
    for (AttentionMode mode : modes) {
        ModelConfig cfg = base_cfg;
        cfg.attention_mode = mode;
        CvOptions mode_options = options;
        if (!options.checkpoint_path.empty()) {
            mode_options.checkpoint_path = options.checkpoint_path + "." + to_string(mode) + ".ckpt";
        }
        reports.push_back(cross_validate<T>(manifest, store, cfg, train_cfg, mode_options));
    }
    for (std::size_t m = 1; m < reports.size(); ++m) {
        if (reports[m].param_count != reports[0].param_count) {
            throw StateError("ablation: parameter counts differ between modes");
        }
        for (std::size_t r = 0; r < reports[m].runs.size(); ++r) {
            if (reports[m].runs[r].batch_log != reports[0].runs[r].batch_log) {
                throw StateError("ablation: modes consumed different batch sequences");
            }
        }
    }
    return reports;
}

// ---------------------------------------------------------------------------
// JSON serialization

inline nlohmann::json to_json(const FoldRun& run) {
    return nlohmann::json{
        {"fold", run.fold},           {"repeat", run.repeat},
        {"seed", run.seed},           {"accuracy", run.accuracy},
        {"loss_history", run.loss_history}, {"lr_trace", run.lr_trace},
        {"batch_log", run.batch_log}, {"train_accuracy", run.train_accuracy},
        {"wall_seconds", run.wall_seconds},
    };
}

inline nlohmann::json to_json(const RunReport& report) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : report.runs) runs.push_back(to_json(r));
    return nlohmann::json{
        {"mode", report.mode},
        {"config", report.config_echo},
        {"config_hash", report.config_hash},
        {"param_count", report.param_count},
        {"runs", runs},
        {"mean_accuracy", report.mean_accuracy},
        {"std_accuracy", report.std_accuracy},
        {"wall_seconds", report.wall_seconds},
    };
}

}  // namespace mcta

// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.
//
// Operator CLI: dataset synthesis, feature extraction, augmentation,
// training/ablation with JSON reports, attention-vector dumps, gradient
// checking, and parameter accounting.
//
// Exit codes: 0 success, 1 runtime/IO failure, 2 validation error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcta/augment.hpp"
#include "mcta/config.hpp"
#include "mcta/dataset.hpp"
#include "mcta/feature_store.hpp"
#include "mcta/gradcheck.hpp"
#include "mcta/model.hpp"
#include "mcta/train.hpp"

namespace fs = std::filesystem;
using namespace mcta;

namespace {

// Bad user-supplied input paths are validation errors (exit 2), unlike IO
// failures encountered mid-run (exit 1).
void require_input_file(const std::string& path, const char* what) {
    if (!fs::exists(path)) {
        throw InvalidInputError(std::string(what) + " '" + path + "' does not exist");
    }
}

struct CommonArgs {
    std::string config_file;
    int jobs = 1;
    bool verbose = false;
};

Config build_config(const CommonArgs& common, const std::map<std::string, std::string>& overrides) {
    Config cfg;
    if (!common.config_file.empty()) {
        require_input_file(common.config_file, "config file");
        cfg.load_file(common.config_file);
    }
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    return cfg;
}

std::string resolve_cache_dir(const std::string& flag_value, const std::string& manifest_path) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("MCTA_CACHE_DIR"); env && *env) return env;
    return (fs::path(manifest_path).parent_path() / "feature_cache").string();
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : csv) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

void write_json_report(const std::string& path, const nlohmann::json& j) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open report file '" + path + "'");
    out << j.dump(2) << "\n";
}

// Derives num_classes from the manifest when the config leaves it at the
// default, so synthetic sets don't need an explicit override.
ModelConfig model_config_for(const Config& cfg, const Manifest& manifest) {
    ModelConfig mc = cfg.model_config();
    if (cfg.is_default("model.num_classes")) {
        std::int64_t max_label = 0;
        for (const auto& r : manifest.rows) max_label = std::max(max_label, r.label);
        mc.num_classes = static_cast<int>(max_label + 1);
        mc.validate();
    }
    return mc;
}

FeatureStore load_features_or_die(const Manifest& manifest, const std::string& cache_dir, const Config& cfg,
                                  int jobs, bool verbose) {
    FeatureStore store;
    auto stats = ensure_features(manifest, cache_dir, cfg.feature_config(), &store, jobs,
                                 [](const std::string& msg) { std::cerr << "warning: " << msg << "\n"; });
    if (verbose) {
        std::cerr << "features: " << stats.cache_hits << " cached, " << stats.extracted << " extracted, "
                  << stats.repaired << " repaired\n";
    }
    return store;
}

// ---------------------------------------------------------------------------

int cmd_synth(const CommonArgs& common, const std::map<std::string, std::string>& overrides,
              const std::string& out_dir, bool force) {
    Config cfg = build_config(common, overrides);
    const auto manifest_path = fs::path(out_dir) / "manifest.csv";
    if (fs::exists(manifest_path) && !force) {
        std::cout << "synth: '" << manifest_path.string() << "' already exists, use --force to regenerate\n";
        return 0;
    }
    auto manifest = synth_dataset(cfg.synth_spec(), out_dir);
    std::cout << "synth: wrote " << manifest.rows.size() << " clips to " << out_dir << "\n";
    return 0;
}

int cmd_features(const CommonArgs& common, const std::map<std::string, std::string>& overrides,
                 const std::string& manifest_path, const std::string& cache_flag) {
    require_input_file(manifest_path, "manifest");
    Config cfg = build_config(common, overrides);
    auto manifest = load_manifest(manifest_path);
    const std::string cache_dir = resolve_cache_dir(cache_flag, manifest_path);
    FeatureStore store;
    auto stats = ensure_features(manifest, cache_dir, cfg.feature_config(), &store, common.jobs,
                                 [](const std::string& msg) { std::cerr << "warning: " << msg << "\n"; });
    std::cout << "features: " << manifest.rows.size() << " clips -> " << cache_dir << " ("
              << stats.cache_hits << " cached, " << stats.extracted << " extracted, " << stats.repaired
              << " repaired)\n";
    return 0;
}

int cmd_augment(const CommonArgs& common, const std::map<std::string, std::string>& overrides,
                const std::string& manifest_path, const std::string& out_dir) {
    require_input_file(manifest_path, "manifest");
    Config cfg = build_config(common, overrides);
    auto manifest = load_manifest(manifest_path);
    const auto audio_dir = fs::path(out_dir) / "audio";
    auto expanded = augment_manifest(manifest, cfg.augment_spec(), audio_dir.string(), out_dir, common.jobs);
    fs::create_directories(out_dir);
    save_manifest((fs::path(out_dir) / "manifest.csv").string(), expanded);
    std::cout << "augment: " << manifest.rows.size() << " -> " << expanded.rows.size() << " entries in "
              << out_dir << "\n";
    return 0;
}

int cmd_train(const CommonArgs& common, const std::map<std::string, std::string>& overrides,
              const std::string& manifest_path, const std::string& cache_flag, int declared_folds,
              const std::string& report_path, const std::string& checkpoint_path) {
    require_input_file(manifest_path, "manifest");
    Config cfg = build_config(common, overrides);
    auto manifest = load_manifest(manifest_path, declared_folds);
    const std::string cache_dir = resolve_cache_dir(cache_flag, manifest_path);
    auto store = load_features_or_die(manifest, cache_dir, cfg, common.jobs, common.verbose);

    ModelConfig mc = model_config_for(cfg, manifest);
    TrainConfig tc = cfg.train_config();
    CvOptions options;
    options.jobs = common.jobs;
    options.checkpoint_path = checkpoint_path;

    auto report = cross_validate<float>(manifest, store, mc, tc, options);
    report.config_echo = cfg.echo();
    report.config_hash = cfg.hash();
    write_json_report(report_path, to_json(report));
    std::cout << "train[" << report.mode << "]: accuracy " << report.mean_accuracy << " +/- "
              << report.std_accuracy << " (" << report.runs.size() << " runs, " << report.param_count
              << " params)\n";
    return 0;
}

int cmd_ablate(const CommonArgs& common, const std::map<std::string, std::string>& overrides,
               const std::string& manifest_path, const std::string& cache_flag, int declared_folds,
               const std::string& modes_csv, const std::string& report_path,
               const std::string& checkpoint_prefix) {
    require_input_file(manifest_path, "manifest");
    Config cfg = build_config(common, overrides);
    auto manifest = load_manifest(manifest_path, declared_folds);
    const std::string cache_dir = resolve_cache_dir(cache_flag, manifest_path);
    auto store = load_features_or_die(manifest, cache_dir, cfg, common.jobs, common.verbose);

    std::vector<AttentionMode> modes;
    for (const auto& name : split_list(modes_csv)) modes.push_back(attention_mode_from(name));
    if (modes.empty()) throw InvalidInputError("ablate: --modes must name at least one mode");

    ModelConfig mc = model_config_for(cfg, manifest);
    TrainConfig tc = cfg.train_config();
    CvOptions options;
    options.jobs = common.jobs;
    options.checkpoint_path = checkpoint_prefix;

    auto reports = ablation<float>(manifest, store, mc, tc, modes, options);
    nlohmann::json out;
    out["reports"] = nlohmann::json::array();
    for (auto& r : reports) {
        r.config_echo = cfg.echo();
        r.config_hash = cfg.hash();
        out["reports"].push_back(to_json(r));
    }
    write_json_report(report_path, out);
    std::cout << "mode     params      mean_acc  std\n";
    for (const auto& r : reports) {
        std::cout.width(8);
        std::cout << std::left << r.mode;
        std::cout.width(12);
        std::cout << r.param_count;
        std::cout.width(10);
        std::cout << r.mean_accuracy;
        std::cout << r.std_accuracy << "\n";
    }
    return 0;
}

int cmd_attention_dump(const CommonArgs& common, const std::map<std::string, std::string>& overrides,
                       const std::string& checkpoint_path, const std::string& manifest_path,
                       const std::string& cache_flag, const std::string& clips_csv, int channels,
                       std::uint64_t seed, const std::string& out_path) {
    require_input_file(checkpoint_path, "checkpoint");
    require_input_file(manifest_path, "manifest");
    Config cfg = build_config(common, overrides);
    auto model = load_checkpoint<float>(checkpoint_path);
    auto manifest = load_manifest(manifest_path);
    const std::string cache_dir = resolve_cache_dir(cache_flag, manifest_path);

    auto clip_ids = split_list(clips_csv);
    if (clip_ids.empty()) throw InvalidInputError("attention-dump: --clips must name at least one clip id");
    if (channels < 1) throw InvalidInputError("attention-dump: --channels must be >= 1");

    Manifest subset;
    subset.base_dir = manifest.base_dir;
    for (const auto& id : clip_ids) {
        bool found = false;
        for (const auto& r : manifest.rows) {
            if (r.id == id) {
                subset.rows.push_back(r);
                found = true;
                break;
            }
        }
        if (!found) throw InvalidInputError("attention-dump: clip '" + id + "' not in manifest");
    }
    auto store = load_features_or_die(subset, cache_dir, cfg, common.jobs, common.verbose);

    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw IoError("attention-dump: cannot open '" + out_path + "'");
    out << "clip_id,channel,t,weight\n";
    const int hidden = model.config().hidden_channels;
    for (const auto& id : clip_ids) {
        const FeatureInput& feat = store.at(id);
        auto x = Tensor<float>::zeros({1, 3, feat.frames, feat.mel_bins});
        x->data().assign(feat.data.begin(), feat.data.end());
        auto a = model.attention_map(x);  // 1 x C x T' x 1 (C == 1 in single mode)
        const std::int64_t tprime = a->dim(2);

        Rng rng(derive_seed(seed, id));
        std::set<int> chosen;
        while (static_cast<int>(chosen.size()) < std::min(channels, hidden)) {
            chosen.insert(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(hidden))));
        }
        for (int c : chosen) {
            const std::int64_t row = a->dim(1) == 1 ? 0 : c;  // broadcast single-mode vector
            for (std::int64_t t = 0; t < tprime; ++t) {
                out << id << ',' << c << ',' << t << ',' << a->data()[row * tprime + t] << "\n";
            }
        }
    }
    std::cout << "attention-dump: wrote " << out_path << "\n";
    return 0;
}

int cmd_params(const CommonArgs& common, const std::map<std::string, std::string>& overrides) {
    Config cfg = build_config(common, overrides);
    ModelConfig mc = cfg.model_config();
    MctaModel<float> model(mc, 0);
    std::int64_t total = 0;
    std::cout << "layer            shape           count\n";
    for (auto& [name, p] : model.named_parameters()) {
        std::cout.width(17);
        std::cout << std::left << name;
        std::cout.width(16);
        std::cout << shape_str(p->shape());
        std::cout << p->size() << "\n";
        total += p->size();
    }
    std::cout << "total " << total << " (mode " << to_string(mc.attention_mode) << ")\n";
    return 0;
}

// Per-op finite-difference checks, 64-bit, mirroring the library test suite.
int cmd_gradcheck(const std::string& ops_csv) {
    struct Check {
        std::string name;
        double threshold;
        std::function<GradCheckResult()> run;
    };
    std::vector<Check> checks;
    auto add = [&](const std::string& name, double thr, std::function<GradCheckResult()> fn) {
        checks.push_back({name, thr, std::move(fn)});
    };

    add("conv2d", 1e-4, [] {
        Rng rng(1);
        auto x = Tensor<double>::randn({2, 2, 5, 4}, rng, 1.0, true);
        auto w = Tensor<double>::randn({3, 2, 3, 2}, rng, 0.5, true);
        auto b = Tensor<double>::randn({3}, rng, 0.5, true);
        auto mix = Tensor<double>::randn({2, 3, 3, 3}, rng);
        return gradcheck({x, w, b}, [&] { return sum_all(hadamard(conv2d(x, w, b, {2, 1}, {1, 0}), mix)); });
    });
    add("maxpool2d", 1e-4, [] {
        Rng rng(2);
        auto x = Tensor<double>::randn({1, 2, 6, 6}, rng, 1.0, true);
        auto mix = Tensor<double>::randn({1, 2, 3, 3}, rng);
        return gradcheck({x}, [&] { return sum_all(hadamard(maxpool2d(x, {2, 2}, {2, 2}), mix)); }, 1e-6, 40);
    });
    add("batchnorm", 1e-4, [] {
        Rng rng(3);
        auto x = Tensor<double>::randn({3, 2, 2, 2}, rng, 1.0, true);
        auto mix = Tensor<double>::randn({3, 2, 2, 2}, rng);
        return gradcheck({x}, [&] {
            auto st = BatchNormState<double>::make(2);
            return sum_all(hadamard(batchnorm(x, st, Phase::Train), mix));
        });
    });
    for (auto kind : {Activation::Elu, Activation::Relu, Activation::Sigmoid}) {
        const std::string name = kind == Activation::Elu ? "elu" : kind == Activation::Relu ? "relu" : "sigmoid";
        add(name, 1e-4, [kind] {
            Rng rng(4);
            auto x = Tensor<double>::zeros({20}, true);
            for (auto& v : x->data()) {
                v = rng.uniform(-3.0, 3.0);
                if (std::abs(v) < 0.05) v = 0.1;
            }
            auto mix = Tensor<double>::randn({20}, rng);
            return gradcheck({x}, [&] { return sum_all(hadamard(activation(x, kind), mix)); });
        });
    }
    add("reduce_sum", 1e-4, [] {
        Rng rng(5);
        auto x = Tensor<double>::randn({2, 3, 4}, rng, 1.0, true);
        auto mix = Tensor<double>::randn({2, 1, 4}, rng);
        return gradcheck({x}, [&] { return sum_all(hadamard(reduce_sum(x, 1, true), mix)); });
    });
    add("hadamard", 1e-4, [] {
        Rng rng(6);
        auto a = Tensor<double>::randn({3, 4}, rng, 1.0, true);
        auto b = Tensor<double>::randn({3, 4}, rng, 1.0, true);
        return gradcheck({a, b}, [&] { return sum_all(hadamard(a, b)); });
    });
    add("divide", 1e-4, [] {
        Rng rng(7);
        auto a = Tensor<double>::randn({2, 4}, rng, 1.0, true);
        auto b = Tensor<double>::from({2, 1}, {1.7, -2.3}, true);
        auto mix = Tensor<double>::randn({2, 4}, rng);
        return gradcheck({a, b}, [&] { return sum_all(hadamard(divide(a, b), mix)); });
    });
    add("linear", 1e-4, [] {
        Rng rng(8);
        auto x = Tensor<double>::randn({3, 4}, rng, 1.0, true);
        auto w = Tensor<double>::randn({5, 4}, rng, 0.5, true);
        auto b = Tensor<double>::randn({5}, rng, 0.5, true);
        auto mix = Tensor<double>::randn({3, 5}, rng);
        return gradcheck({x, w, b}, [&] { return sum_all(hadamard(linear(x, w, b), mix)); });
    });
    add("dropout", 1e-4, [] {
        Rng rng(9);
        auto x = Tensor<double>::randn({40}, rng, 1.0, true);
        auto mix = Tensor<double>::randn({40}, rng);
        return gradcheck({x}, [&] {
            Rng drop(42);
            return sum_all(hadamard(dropout(x, 0.3, Phase::Train, drop), mix));
        });
    });
    add("softmax_cross_entropy", 1e-4, [] {
        Rng rng(10);
        auto x = Tensor<double>::randn({3, 5}, rng, 1.0, true);
        return gradcheck({x}, [&] { return softmax_cross_entropy(x, {0, 3, 2}); });
    });
    add("model_e2e", 1e-3, [] {
        ModelConfig cfg;
        cfg.hidden_channels = 8;
        cfg.num_classes = 3;
        cfg.mel_bins = 16;
        cfg.embedding.block1_filters = 4;
        cfg.embedding.block2_filters = 6;
        cfg.embedding.pool1 = {2, 2};
        cfg.embedding.pool2 = {2, 2};
        cfg.embedding.final_kernel = {3, 4};
        cfg.embedding.final_stride = {1, 1};
        MctaModel<double> model(cfg, 79);
        Rng rng(83);
        auto x = Tensor<double>::randn({2, 3, 16, 16}, rng, 1.0);
        return gradcheck(model.parameters(), [&] {
            Rng drop(17);
            return softmax_cross_entropy(model.forward(x, Phase::Train, drop), {0, 2});
        }, 1e-5, 4);
    });

    std::set<std::string> wanted;
    if (ops_csv != "all") {
        for (const auto& name : split_list(ops_csv)) wanted.insert(name);
        for (const auto& name : wanted) {
            bool known = false;
            for (const auto& c : checks) known |= c.name == name;
            if (!known) throw InvalidInputError("gradcheck: unknown op '" + name + "'");
        }
    }

    bool ok = true;
    for (const auto& c : checks) {
        if (!wanted.empty() && !wanted.count(c.name)) continue;
        const auto result = c.run();
        const bool pass = result.max_rel_err < c.threshold;
        ok &= pass;
        std::cout.width(22);
        std::cout << std::left << c.name;
        std::cout << " max_rel_err=" << result.max_rel_err << " (" << result.checked << " coords) "
                  << (pass ? "PASS" : "FAIL") << "\n";
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-channel temporal attention sound classifier"};
    app.require_subcommand(1);

    CommonArgs common;

    // Per-subcommand state.
    std::string out_dir, manifest_path, cache_dir, report_path, checkpoint_path, clips_csv, ops_csv = "all";
    std::string modes_csv = "mcta,single,none";
    bool force = false;
    int declared_folds = 0;
    int channels = 5;
    std::uint64_t dump_seed = 1;
    std::map<std::string, std::string> overrides;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_file, "flat key = value config file");
        sub->add_option("--jobs", common.jobs, "worker threads for independent work items");
        sub->add_flag("--verbose", common.verbose, "chatty progress on stderr");
        sub->add_option_function<std::vector<std::string>>(
               "--set",
               [&overrides](const std::vector<std::string>& kvs) {
                   for (const auto& kv : kvs) {
                       const auto eq = kv.find('=');
                       if (eq == std::string::npos) {
                           throw CLI::ValidationError("--set expects key=value, got '" + kv + "'");
                       }
                       overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
                   }
               },
               "config override key=value (repeatable)")
            ->take_all();
    };

    auto* synth = app.add_subcommand("synth", "generate the seeded synthetic dataset");
    add_common(synth);
    synth->add_option("--out", out_dir, "output dataset directory")->required();
    synth->add_flag("--force", force, "regenerate even if the dataset exists");
    synth->add_option_function<std::uint64_t>(
        "--seed", [&overrides](std::uint64_t s) { overrides["synth.seed"] = std::to_string(s); }, "RNG seed");
    synth->add_option_function<int>(
        "--classes", [&overrides](int v) { overrides["synth.classes"] = std::to_string(v); }, "class count");
    synth->add_option_function<int>(
        "--clips-per-class",
        [&overrides](int v) { overrides["synth.clips_per_class"] = std::to_string(v); }, "clips per class");
    synth->add_option_function<double>(
        "--seconds", [&overrides](double v) { overrides["synth.seconds"] = std::to_string(v); },
        "clip length in seconds");
    synth->add_option_function<int>(
        "--rate", [&overrides](int v) { overrides["synth.sample_rate"] = std::to_string(v); }, "sample rate");

    auto* features = app.add_subcommand("features", "extract and cache log-mel/delta features");
    add_common(features);
    features->add_option("--manifest", manifest_path, "manifest CSV")->required();
    features->add_option("--cache", cache_dir, "feature cache directory (default: MCTA_CACHE_DIR or beside the manifest)");

    auto* augment = app.add_subcommand("augment", "expand a manifest 4x with offline augmentation");
    add_common(augment);
    augment->add_option("--manifest", manifest_path, "manifest CSV of originals")->required();
    augment->add_option("--out", out_dir, "output directory for variants + manifest")->required();
    augment->add_option_function<std::uint64_t>(
        "--seed", [&overrides](std::uint64_t s) { overrides["augment.seed"] = std::to_string(s); }, "RNG seed");
    augment->add_flag_function(
        "--pitch-integer",
        [&overrides](std::int64_t) { overrides["augment.pitch_integer"] = "1"; },
        "draw integer semitone offsets");

    auto add_train_flags = [&](CLI::App* sub) {
        add_common(sub);
        sub->add_option("--manifest", manifest_path, "manifest CSV")->required();
        sub->add_option("--cache", cache_dir, "feature cache directory");
        sub->add_option("--folds", declared_folds, "declared fold count for validation");
        sub->add_option("--report", report_path, "report JSON path ('-' for stdout)");
        sub->add_option_function<int>(
            "--epochs", [&overrides](int v) { overrides["train.epochs"] = std::to_string(v); }, "epochs");
        sub->add_option_function<int>(
            "--repeats", [&overrides](int v) { overrides["train.repeats"] = std::to_string(v); }, "repeats");
        sub->add_option_function<int>(
            "--batch", [&overrides](int v) { overrides["train.batch_size"] = std::to_string(v); }, "batch size");
        sub->add_option_function<double>(
            "--lr", [&overrides](double v) { overrides["train.lr"] = std::to_string(v); }, "initial learning rate");
        sub->add_option_function<std::uint64_t>(
            "--seed", [&overrides](std::uint64_t s) { overrides["train.seed"] = std::to_string(s); }, "base seed");
    };

    auto* train = app.add_subcommand("train", "cross-validated training, one attention mode");
    add_train_flags(train);
    train->add_option_function<std::string>(
        "--mode", [&overrides](const std::string& m) { overrides["model.attention_mode"] = m; },
        "attention mode (mcta|single|none)");
    train->add_option("--checkpoint", checkpoint_path, "save the first fold-run model here");

    auto* ablate = app.add_subcommand("ablate", "run all attention modes with shared seeds");
    add_train_flags(ablate);
    ablate->add_option("--modes", modes_csv, "comma list of modes (default mcta,single,none)");
    ablate->add_option("--checkpoint-prefix", checkpoint_path, "save first fold-run models as <prefix>.<mode>.ckpt");

    auto* dump = app.add_subcommand("attention-dump", "CSV of per-channel attention vectors");
    add_common(dump);
    dump->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
    dump->add_option("--manifest", manifest_path, "manifest CSV")->required();
    dump->add_option("--cache", cache_dir, "feature cache directory");
    dump->add_option("--clips", clips_csv, "comma list of clip ids")->required();
    dump->add_option("--channels", channels, "channels sampled per clip (default 5)");
    dump->add_option("--seed", dump_seed, "channel sampling seed");
    dump->add_option("--out", report_path, "output CSV path")->required();

    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference checks of every op");
    gradcheck_cmd->add_option("--ops", ops_csv, "'all' or comma list of op names");

    auto* params = app.add_subcommand("params", "parameter count table");
    add_common(params);
    params->add_option_function<std::string>(
        "--mode", [&overrides](const std::string& m) { overrides["model.attention_mode"] = m; },
        "attention mode (mcta|single|none)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(common, overrides, out_dir, force);
        if (features->parsed()) return cmd_features(common, overrides, manifest_path, cache_dir);
        if (augment->parsed()) return cmd_augment(common, overrides, manifest_path, out_dir);
        if (train->parsed()) {
            return cmd_train(common, overrides, manifest_path, cache_dir, declared_folds, report_path,
                             checkpoint_path);
        }
        if (ablate->parsed()) {
            return cmd_ablate(common, overrides, manifest_path, cache_dir, declared_folds, modes_csv,
                              report_path, checkpoint_path);
        }
        if (dump->parsed()) {
            return cmd_attention_dump(common, overrides, checkpoint_path, manifest_path, cache_dir,
                                      clips_csv, channels, dump_seed, report_path);
        }
        if (gradcheck_cmd->parsed()) return cmd_gradcheck(ops_csv);
        if (params->parsed()) return cmd_params(common, overrides);
    } catch (const InvalidInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

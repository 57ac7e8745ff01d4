// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.
//
// Flat `key = value` configuration with fixed layering: built-in defaults,
// then a config file, then command-line flags. Unknown keys are rejected and
// the effective configuration is echoed into every report.

#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "mcta/augment.hpp"
#include "mcta/dataset.hpp"
#include "mcta/errors.hpp"
#include "mcta/model.hpp"
#include "mcta/rng.hpp"
#include "mcta/train.hpp"

namespace mcta {

class Config {
public:
    Config() : values_(defaults()) {}

    static const std::map<std::string, std::string>& defaults() {
        static const std::map<std::string, std::string> kDefaults = {
            {"model.hidden_channels", "512"},
            {"model.attention_mode", "mcta"},
            {"model.shared_attention_conv", "1"},
            {"model.dropout", "0.3"},
            {"model.num_classes", "50"},
            {"embed.block1_filters", "48"},
            {"embed.block2_filters", "96"},
            {"embed.conv_kernel_t", "3"},
            {"embed.conv_kernel_f", "3"},
            {"embed.pool1_t", "2"},
            {"embed.pool1_f", "8"},
            {"embed.pool2_t", "2"},
            {"embed.pool2_f", "4"},
            {"embed.final_kernel_t", "5"},
            {"embed.final_kernel_f", "4"},
            {"embed.final_stride_t", "2"},
            {"embed.final_stride_f", "1"},
            {"bn.momentum", "0.1"},
            {"bn.epsilon", "1e-5"},
            {"train.lr", "0.001"},
            {"train.lr_decay", "0.5"},
            {"train.batch_size", "50"},
            {"train.epochs", "50"},
            {"train.repeats", "5"},
            {"train.seed", "1234"},
            {"train.stop_at_train_accuracy", "0"},
            {"features.n_fft", "1024"},
            {"features.hop", "512"},
            {"features.n_mels", "128"},
            {"features.delta_width", "9"},
            {"features.db_scale", "1"},
            {"augment.max_shift_seconds", "2.5"},
            {"augment.pitch_min", "-4"},
            {"augment.pitch_max", "4"},
            {"augment.pitch_integer", "0"},
            {"augment.noise_factor", "0.01"},
            {"augment.seed", "1"},
            {"synth.classes", "8"},
            {"synth.clips_per_class", "40"},
            {"synth.seconds", "5"},
            {"synth.sample_rate", "22050"},
            {"synth.seed", "1"},
        };
        return kDefaults;
    }

    void set(const std::string& key, const std::string& value) {
        if (!defaults().count(key)) {
            throw InvalidInputError("config: unknown key '" + key + "'");
        }
        values_[key] = value;
        touched_.insert(key);
    }

    // True when the key still holds its built-in default (no file or flag
    // has touched it).
    bool is_default(const std::string& key) const { return !touched_.count(key); }

    // Parses `key = value` lines; '#' starts a comment, blank lines ignored.
    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("config: cannot open '" + path + "'");
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                if (a == std::string::npos) return std::string();
                const auto b = s.find_last_not_of(" \t\r");
                return s.substr(a, b - a + 1);
            };
            if (trim(line).empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ParseError("config: line " + std::to_string(lineno) + " of '" + path +
                                 "' is not 'key = value'");
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            try {
                set(key, value);
            } catch (const InvalidInputError& e) {
                throw ParseError("config: line " + std::to_string(lineno) + " of '" + path + "': " + e.what());
            }
        }
    }

    const std::string& get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw InvalidInputError("config: unknown key '" + key + "'");
        return it->second;
    }

    std::int64_t get_int(const std::string& key) const {
        try {
            return std::stoll(get(key));
        } catch (const std::exception&) {
            throw InvalidInputError("config: key '" + key + "' = '" + get(key) + "' is not an integer");
        }
    }

    double get_double(const std::string& key) const {
        try {
            return std::stod(get(key));
        } catch (const std::exception&) {
            throw InvalidInputError("config: key '" + key + "' = '" + get(key) + "' is not a number");
        }
    }

    bool get_bool(const std::string& key) const {
        const std::string& v = get(key);
        if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
        if (v == "0" || v == "false" || v == "no" || v == "off") return false;
        throw InvalidInputError("config: key '" + key + "' = '" + v + "' is not a boolean");
    }

    ModelConfig model_config() const {
        ModelConfig c;
        c.hidden_channels = static_cast<int>(get_int("model.hidden_channels"));
        c.attention_mode = attention_mode_from(get("model.attention_mode"));
        c.shared_attention_conv = get_bool("model.shared_attention_conv");
        c.dropout_rate = get_double("model.dropout");
        c.num_classes = static_cast<int>(get_int("model.num_classes"));
        c.mel_bins = static_cast<int>(get_int("features.n_mels"));
        c.embedding.block1_filters = static_cast<int>(get_int("embed.block1_filters"));
        c.embedding.block2_filters = static_cast<int>(get_int("embed.block2_filters"));
        c.embedding.conv_kernel = {get_int("embed.conv_kernel_t"), get_int("embed.conv_kernel_f")};
        c.embedding.pool1 = {get_int("embed.pool1_t"), get_int("embed.pool1_f")};
        c.embedding.pool2 = {get_int("embed.pool2_t"), get_int("embed.pool2_f")};
        c.embedding.final_kernel = {get_int("embed.final_kernel_t"), get_int("embed.final_kernel_f")};
        c.embedding.final_stride = {get_int("embed.final_stride_t"), get_int("embed.final_stride_f")};
        c.bn_momentum = get_double("bn.momentum");
        c.bn_epsilon = get_double("bn.epsilon");
        c.validate();
        return c;
    }

    TrainConfig train_config() const {
        TrainConfig c;
        c.lr_init = get_double("train.lr");
        c.lr_decay = get_double("train.lr_decay");
        c.batch_size = static_cast<int>(get_int("train.batch_size"));
        c.epochs = static_cast<int>(get_int("train.epochs"));
        c.repeats = static_cast<int>(get_int("train.repeats"));
        c.seed = static_cast<std::uint64_t>(get_int("train.seed"));
        c.stop_at_train_accuracy = get_double("train.stop_at_train_accuracy");
        c.validate();
        return c;
    }

    FeatureConfig feature_config() const {
        FeatureConfig c;
        c.n_fft = static_cast<int>(get_int("features.n_fft"));
        c.hop = static_cast<int>(get_int("features.hop"));
        c.n_mels = static_cast<int>(get_int("features.n_mels"));
        c.delta_width = static_cast<int>(get_int("features.delta_width"));
        c.db_scale = get_bool("features.db_scale");
        return c;
    }

    AugmentSpec augment_spec() const {
        AugmentSpec s;
        s.max_shift_seconds = get_double("augment.max_shift_seconds");
        s.pitch_min_semitones = get_double("augment.pitch_min");
        s.pitch_max_semitones = get_double("augment.pitch_max");
        s.pitch_integer = get_bool("augment.pitch_integer");
        s.noise_factor = get_double("augment.noise_factor");
        s.seed = static_cast<std::uint64_t>(get_int("augment.seed"));
        return s;
    }

    SynthSpec synth_spec() const {
        SynthSpec s;
        s.num_classes = static_cast<int>(get_int("synth.classes"));
        s.clips_per_class = static_cast<int>(get_int("synth.clips_per_class"));
        s.clip_seconds = get_double("synth.seconds");
        s.sample_rate = static_cast<int>(get_int("synth.sample_rate"));
        s.seed = static_cast<std::uint64_t>(get_int("synth.seed"));
        return s;
    }

    const std::map<std::string, std::string>& echo() const { return values_; }

    std::string hash() const {
        std::string canon;
        for (const auto& [k, v] : values_) {
            canon += k;
            canon += '=';
            canon += v;
            canon += '\n';
        }
        std::ostringstream os;
        os << std::hex << fnv1a64(canon);
        return os.str();
    }

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> touched_;
};

}  // namespace mcta

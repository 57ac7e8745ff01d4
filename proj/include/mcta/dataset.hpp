// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.
//
// Manifest handling for fold-organized audio datasets, plus a seeded
// synthetic dataset generator used for desk-scale experiments.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "mcta/errors.hpp"
#include "mcta/rng.hpp"
#include "mcta/wav.hpp"

namespace mcta {

enum class VariantKind { Original, TimeShift, PitchShift, Noise };

inline std::string to_string(VariantKind k) {
    switch (k) {
        case VariantKind::Original: return "original";
        case VariantKind::TimeShift: return "time_shift";
        case VariantKind::PitchShift: return "pitch_shift";
        case VariantKind::Noise: return "noise";
    }
    return "?";
}

inline VariantKind variant_kind_from(const std::string& s) {
    if (s == "original") return VariantKind::Original;
    if (s == "time_shift") return VariantKind::TimeShift;
    if (s == "pitch_shift") return VariantKind::PitchShift;
    if (s == "noise") return VariantKind::Noise;
    throw ParseError("unknown variant kind '" + s + "'");
}

struct ManifestRow {
    std::string id;
    std::string path;  // relative paths resolve against the manifest directory
    std::int64_t label = 0;
    int fold = 0;
    VariantKind variant_kind = VariantKind::Original;
    std::string source_id;  // equals id for originals
};

struct Manifest {
    std::vector<ManifestRow> rows;
    std::string base_dir;

    std::string resolve_path(const ManifestRow& row) const {
        std::filesystem::path p(row.path);
        if (p.is_absolute()) return row.path;
        return (std::filesystem::path(base_dir) / p).lexically_normal().string();
    }

    std::vector<int> folds() const {
        std::set<int> seen;
        for (const auto& r : rows) seen.insert(r.fold);
        return {seen.begin(), seen.end()};
    }

    std::size_t original_count() const {
        std::size_t n = 0;
        for (const auto& r : rows) n += r.variant_kind == VariantKind::Original;
        return n;
    }
};

inline constexpr const char* kManifestHeader = "id,path,label,fold,variant_kind,source_id";

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace detail

// Loads and validates a manifest CSV. When declared_folds > 0, every fold id
// must lie in [1, declared_folds].
inline Manifest load_manifest(const std::string& path, int declared_folds = 0) {
    std::ifstream in(path);
    if (!in) throw IoError("load_manifest: cannot open '" + path + "'");
    Manifest m;
    m.base_dir = std::filesystem::path(path).parent_path().string();
    if (m.base_dir.empty()) m.base_dir = ".";

    std::string line;
    if (!std::getline(in, line)) throw ParseError("load_manifest: '" + path + "' is empty");
    {
        auto hdr = line;
        if (!hdr.empty() && hdr.back() == '\r') hdr.pop_back();
        if (hdr != kManifestHeader) {
            throw ParseError("load_manifest: bad header, expected '" + std::string(kManifestHeader) + "'");
        }
    }

    std::unordered_map<std::string, std::size_t> by_id;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto f = detail::split_csv_line(line);
        const std::string where = "load_manifest: row " + std::to_string(lineno);
        if (f.size() != 6) {
            throw ParseError(where + ": expected 6 fields, got " + std::to_string(f.size()));
        }
        ManifestRow row;
        row.id = f[0];
        row.path = f[1];
        try {
            row.label = std::stoll(f[2]);
            row.fold = std::stoi(f[3]);
        } catch (const std::exception&) {
            throw ParseError(where + ": label/fold must be integers");
        }
        row.variant_kind = [&] {
            try {
                return variant_kind_from(f[4]);
            } catch (const ParseError& e) {
                throw ParseError(where + ": " + e.what());
            }
        }();
        row.source_id = f[5];
        if (row.id.empty()) throw ParseError(where + ": empty id");
        if (row.label < 0) throw ParseError(where + ": negative label");
        if (row.fold < 1) throw ParseError(where + ": fold must be >= 1");
        if (declared_folds > 0 && row.fold > declared_folds) {
            throw ParseError(where + ": fold " + std::to_string(row.fold) + " outside declared 1.." +
                             std::to_string(declared_folds));
        }
        if (row.variant_kind == VariantKind::Original && row.source_id != row.id) {
            throw ParseError(where + ": original rows must have source_id == id");
        }
        if (!by_id.emplace(row.id, lineno).second) {
            throw ParseError(where + ": duplicate id '" + row.id + "'");
        }
        m.rows.push_back(std::move(row));
    }

    // Variants must point at an existing original and live in its fold.
    std::unordered_map<std::string, const ManifestRow*> originals;
    for (const auto& r : m.rows) {
        if (r.variant_kind == VariantKind::Original) originals[r.id] = &r;
    }
    for (const auto& r : m.rows) {
        if (r.variant_kind == VariantKind::Original) continue;
        auto it = originals.find(r.source_id);
        if (it == originals.end()) {
            throw ParseError("load_manifest: variant '" + r.id + "' has dangling source_id '" + r.source_id + "'");
        }
        if (it->second->fold != r.fold) {
            throw ParseError("load_manifest: variant '" + r.id + "' fold " + std::to_string(r.fold) +
                             " differs from its source fold " + std::to_string(it->second->fold));
        }
    }
    return m;
}

inline void save_manifest(const std::string& path, const Manifest& m) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw IoError("save_manifest: cannot open '" + tmp + "'");
        out << kManifestHeader << "\n";
        for (const auto& r : m.rows) {
            out << r.id << ',' << r.path << ',' << r.label << ',' << r.fold << ','
                << to_string(r.variant_kind) << ',' << r.source_id << "\n";
        }
        if (!out) throw IoError("save_manifest: short write to '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("save_manifest: rename to '" + path + "' failed: " + ec.message());
}

// ---------------------------------------------------------------------------
// Synthetic dataset

struct SynthSpec {
    int num_classes = 8;
    int clips_per_class = 40;
    double clip_seconds = 5.0;
    int sample_rate = 22050;
    std::uint64_t seed = 1;
};

namespace detail {

// Eight sound archetypes arranged in pairs that share a spectral band but
// differ in temporal structure (steady vs bursty, up vs down sweep, tremolo
// vs clicks), so time-averaged spectra alone cannot separate everything.
// Classes beyond 8 cycle through the archetypes with shifted parameters.
inline std::vector<float> synth_clip(int class_idx, Rng& rng, double seconds, int sr) {
    const auto n = static_cast<std::size_t>(seconds * sr);
    std::vector<float> x(n, 0.0f);
    const double two_pi = 2.0 * 3.14159265358979323846;
    const int archetype = class_idx % 8;
    const double detune = 1.0 + 0.12 * (class_idx / 8);  // keeps extra classes distinct

    auto add_tone = [&](double freq, double amp, std::size_t from, std::size_t to, double phase) {
        to = std::min(to, n);
        for (std::size_t i = from; i < to; ++i) {
            x[i] += static_cast<float>(amp * std::sin(two_pi * freq * (i - from) / sr + phase));
        }
    };
    auto add_bursts = [&](double freq, double amp) {
        const int bursts = 3 + static_cast<int>(rng.uniform_int(4));
        for (int b = 0; b < bursts; ++b) {
            const auto start = static_cast<std::size_t>(rng.uniform(0.0, 0.8) * n);
            const auto burst_len = static_cast<std::size_t>(rng.uniform(0.10, 0.30) * sr);
            add_tone(freq, amp, start, start + burst_len, rng.uniform(0.0, two_pi));
        }
    };
    auto add_chirp = [&](double f0, double f1, double amp) {
        double phase = rng.uniform(0.0, two_pi);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(n);
            const double f = f0 + (f1 - f0) * t;
            phase += two_pi * f / sr;
            x[i] += static_cast<float>(amp * std::sin(phase));
        }
    };

    switch (archetype) {
        case 0:  // steady low tone
            add_tone(rng.uniform(195.0, 260.0) * detune, 0.15, 0, n, rng.uniform(0.0, two_pi));
            break;
        case 1:  // bursts in the same low band as class 0
            add_bursts(rng.uniform(195.0, 260.0) * detune, 0.34);
            break;
        case 2:  // upward sweep
            add_chirp(rng.uniform(240.0, 330.0) * detune, rng.uniform(2100.0, 2900.0) * detune, 0.15);
            break;
        case 3:  // downward sweep of the same band as class 2
            add_chirp(rng.uniform(2100.0, 2900.0) * detune, rng.uniform(240.0, 330.0) * detune, 0.15);
            break;
        case 4: {  // slow-tremolo broadband noise
            const double rate = rng.uniform(2.5, 5.5);
            const double depth = rng.uniform(0.75, 0.95);
            for (std::size_t i = 0; i < n; ++i) {
                const double env = 1.0 - depth * 0.5 * (1.0 + std::cos(two_pi * rate * i / sr));
                x[i] += static_cast<float>(0.12 * env * rng.normal());
            }
            break;
        }
        case 5: {  // sparse broadband click train
            const double rate = rng.uniform(4.0, 9.0);
            const double period = sr / rate;
            double next_click = rng.uniform(0.0, period);
            while (next_click < static_cast<double>(n)) {
                const auto start = static_cast<std::size_t>(next_click);
                const double gain = rng.uniform(0.3, 0.55);
                for (std::size_t i = start; i < std::min(n, start + 400); ++i) {
                    const double t = static_cast<double>(i - start);
                    x[i] += static_cast<float>(gain * std::exp(-t / 60.0) * std::cos(0.45 * t));
                }
                next_click += period * rng.uniform(0.9, 1.1);
            }
            break;
        }
        case 6:  // bursts in the same high band as class 7
            add_bursts(rng.uniform(1250.0, 1650.0) * detune, 0.32);
            break;
        default:  // steady high tone
            add_tone(rng.uniform(1250.0, 1650.0) * detune, 0.14, 0, n, rng.uniform(0.0, two_pi));
            break;
    }

    // Background noise and overall gain jitter keep plain energy a poor cue
    // and hold headline accuracies below the ceiling.
    const double noise = rng.uniform(0.035, 0.075);
    const double gain = rng.uniform(0.8, 1.2);
    for (auto& v : x) {
        v = static_cast<float>(gain * (v + noise * rng.normal()));
        v = std::max(-1.0f, std::min(1.0f, v));
    }
    return x;
}

}  // namespace detail

// Generates `num_classes x clips_per_class` WAVs under <out_dir>/audio plus
// <out_dir>/manifest.csv with round-robin folds 1..5.
inline Manifest synth_dataset(const SynthSpec& spec, const std::string& out_dir) {
    if (spec.num_classes < 1 || spec.clips_per_class < 1 || spec.clip_seconds <= 0 || spec.sample_rate < 1) {
        throw InvalidInputError("synth_dataset: all spec fields must be positive");
    }
    const auto audio_dir = std::filesystem::path(out_dir) / "audio";
    std::filesystem::create_directories(audio_dir);

    Manifest m;
    m.base_dir = out_dir;
    for (int c = 0; c < spec.num_classes; ++c) {
        for (int i = 0; i < spec.clips_per_class; ++i) {
            std::ostringstream id;
            id << "synth_c" << c << "_i";
            id.width(3);
            id.fill('0');
            id << i;
            Rng rng(derive_seed(spec.seed, id.str()));
            auto samples = detail::synth_clip(c, rng, spec.clip_seconds, spec.sample_rate);
            const std::string rel = "audio/" + id.str() + ".wav";
            save_wav((std::filesystem::path(out_dir) / rel).string(), samples, spec.sample_rate);
            ManifestRow row;
            row.id = id.str();
            row.path = rel;
            row.label = c;
            row.fold = 1 + (i % 5);
            row.variant_kind = VariantKind::Original;
            row.source_id = row.id;
            m.rows.push_back(std::move(row));
        }
    }
    save_manifest((std::filesystem::path(out_dir) / "manifest.csv").string(), m);
    return m;
}

}  // namespace mcta

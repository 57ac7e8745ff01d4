// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include "mcta/audio_features.hpp"
#include "mcta/dataset.hpp"
#include "mcta/wav.hpp"

using namespace mcta;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("wav: 16-bit PCM round trip within quantization") {
    auto dir = temp_dir("mcta_wav_test");
    std::vector<float> samples(2205);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        samples[i] = static_cast<float>(0.8 * std::sin(0.01 * static_cast<double>(i)));
    }
    const auto path = (dir / "tone.wav").string();
    save_wav(path, samples, 22050);
    auto loaded = load_wav(path);
    CHECK(loaded.sample_rate == 22050);
    REQUIRE(loaded.samples.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(std::abs(loaded.samples[i] - samples[i]) <= 1.0f / 32768.0f);
    }
    fs::remove_all(dir);
}

TEST_CASE("wav: full-scale square wave hits the quantization rails") {
    auto dir = temp_dir("mcta_wav_square");
    std::vector<float> square(100);
    for (std::size_t i = 0; i < square.size(); ++i) square[i] = i % 2 ? 1.0f : -1.0f;
    const auto path = (dir / "square.wav").string();
    save_wav(path, square, 8000);
    auto loaded = load_wav(path);
    for (std::size_t i = 0; i < square.size(); ++i) {
        if (square[i] > 0) {
            CHECK(loaded.samples[i] == Catch::Approx(32767.0 / 32768.0));
        } else {
            CHECK(loaded.samples[i] == Catch::Approx(-32767.0 / 32768.0));
        }
    }
    CHECK(loaded.samples.size() == 100);
    fs::remove_all(dir);
}

TEST_CASE("wav: stereo downmix averages channels; x and -x cancel") {
    auto dir = temp_dir("mcta_wav_stereo");
    // Hand-built stereo PCM16 file with ch1 = -ch0.
    std::vector<unsigned char> bytes;
    auto put32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
    };
    auto put16 = [&](std::uint16_t v) {
        bytes.push_back(static_cast<unsigned char>(v & 0xff));
        bytes.push_back(static_cast<unsigned char>(v >> 8));
    };
    const int n = 50;
    bytes.insert(bytes.end(), {'R', 'I', 'F', 'F'});
    put32(36 + n * 4);
    bytes.insert(bytes.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put32(16);
    put16(1);
    put16(2);
    put32(8000);
    put32(8000 * 4);
    put16(4);
    put16(16);
    bytes.insert(bytes.end(), {'d', 'a', 't', 'a'});
    put32(n * 4);
    for (int i = 0; i < n; ++i) {
        const auto v = static_cast<std::int16_t>(1000 + 13 * i);
        put16(static_cast<std::uint16_t>(v));
        put16(static_cast<std::uint16_t>(static_cast<std::int16_t>(-v)));
    }
    const auto path = dir / "stereo.wav";
    std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                static_cast<std::streamsize>(bytes.size()));
    auto loaded = load_wav(path.string());
    REQUIRE(loaded.samples.size() == static_cast<std::size_t>(n));
    for (float v : loaded.samples) CHECK(v == 0.0f);
    fs::remove_all(dir);
}

TEST_CASE("wav: malformed files give parse errors") {
    auto dir = temp_dir("mcta_wav_bad");
    write_text(dir / "junk.wav", "this is not a wav file at all...");
    CHECK_THROWS_AS(load_wav((dir / "junk.wav").string()), ParseError);
    CHECK_THROWS_AS(load_wav((dir / "absent.wav").string()), IoError);
    fs::remove_all(dir);
}

TEST_CASE("manifest: load validates structure and names offending rows") {
    auto dir = temp_dir("mcta_manifest_test");
    write_text(dir / "ok.csv",
               "id,path,label,fold,variant_kind,source_id\n"
               "a,audio/a.wav,0,1,original,a\n"
               "b,audio/b.wav,1,2,original,b\n"
               "a.noise.s1,audio/an.wav,0,1,noise,a\n");
    auto m = load_manifest((dir / "ok.csv").string());
    CHECK(m.rows.size() == 3);
    CHECK(m.original_count() == 2);
    CHECK(m.resolve_path(m.rows[0]) == (dir / "audio/a.wav").string());

    write_text(dir / "empty.csv", "id,path,label,fold,variant_kind,source_id\n");
    CHECK(load_manifest((dir / "empty.csv").string()).rows.empty());

    write_text(dir / "dup.csv",
               "id,path,label,fold,variant_kind,source_id\n"
               "a,x.wav,0,1,original,a\n"
               "a,y.wav,0,1,original,a\n");
    CHECK_THROWS_WITH(load_manifest((dir / "dup.csv").string()),
                      Catch::Matchers::ContainsSubstring("row 3"));

    write_text(dir / "fold6.csv",
               "id,path,label,fold,variant_kind,source_id\n"
               "a,x.wav,0,6,original,a\n");
    CHECK_THROWS_WITH(load_manifest((dir / "fold6.csv").string(), 5),
                      Catch::Matchers::ContainsSubstring("fold 6 outside declared 1..5"));

    write_text(dir / "dangling.csv",
               "id,path,label,fold,variant_kind,source_id\n"
               "v.noise.s1,x.wav,0,1,noise,ghost\n");
    CHECK_THROWS_WITH(load_manifest((dir / "dangling.csv").string()),
                      Catch::Matchers::ContainsSubstring("dangling source_id"));

    write_text(dir / "foldmix.csv",
               "id,path,label,fold,variant_kind,source_id\n"
               "a,x.wav,0,1,original,a\n"
               "a.noise.s1,y.wav,0,2,noise,a\n");
    CHECK_THROWS_WITH(load_manifest((dir / "foldmix.csv").string()),
                      Catch::Matchers::ContainsSubstring("differs from its source fold"));

    write_text(dir / "badhdr.csv", "id,path\n");
    CHECK_THROWS_AS(load_manifest((dir / "badhdr.csv").string()), ParseError);
    CHECK_THROWS_AS(load_manifest((dir / "nope.csv").string()), IoError);
    fs::remove_all(dir);
}

TEST_CASE("synth_dataset: default spec yields 320 balanced clips in 5 folds") {
    auto dir = temp_dir("mcta_synth_small");
    SynthSpec spec;
    spec.clips_per_class = 5;  // 40 clips keeps this test quick
    spec.clip_seconds = 0.3;
    spec.seed = 9;
    auto m = synth_dataset(spec, dir.string());
    CHECK(m.rows.size() == 40);
    std::map<int, int> fold_count;
    std::map<std::int64_t, int> label_count;
    for (const auto& r : m.rows) {
        fold_count[r.fold]++;
        label_count[r.label]++;
        CHECK(fs::exists(m.resolve_path(r)));
    }
    CHECK(fold_count.size() == 5);
    CHECK(label_count.size() == 8);
    for (auto& [label, count] : label_count) CHECK(count == 5);

    // Default spec arithmetic: 8 classes x 40 clips = 320.
    CHECK(SynthSpec{}.num_classes * SynthSpec{}.clips_per_class == 320);

    // Same seed reproduces identical bytes; reload matches within 16-bit quantization.
    auto dir2 = temp_dir("mcta_synth_small2");
    synth_dataset(spec, dir2.string());
    for (const auto& r : m.rows) {
        std::ifstream f1(m.resolve_path(r), std::ios::binary);
        std::ifstream f2((dir2 / r.path).string(), std::ios::binary);
        std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
        std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
        REQUIRE(b1 == b2);
    }
    SynthSpec bad = spec;
    bad.num_classes = 0;
    CHECK_THROWS_AS(synth_dataset(bad, dir.string()), InvalidInputError);
    fs::remove_all(dir);
    fs::remove_all(dir2);
}

TEST_CASE("synth_dataset: nearest-centroid probe on time-averaged log-mel beats chance") {
    auto dir = temp_dir("mcta_synth_probe");
    SynthSpec spec;
    spec.clips_per_class = 8;
    spec.clip_seconds = 0.8;
    spec.seed = 4;
    auto m = synth_dataset(spec, dir.string());

    // Time-averaged log-mel vector per clip.
    std::vector<std::vector<double>> feats;
    std::vector<std::int64_t> labels;
    std::vector<int> folds;
    for (const auto& r : m.rows) {
        auto wav = load_wav(m.resolve_path(r));
        AudioClip clip{wav.samples, wav.sample_rate, r.label, r.fold, r.id};
        auto fi = make_input(clip);
        std::vector<double> avg(static_cast<std::size_t>(fi.mel_bins), 0.0);
        for (std::int64_t t = 0; t < fi.frames; ++t)
            for (std::int64_t d = 0; d < fi.mel_bins; ++d)
                avg[static_cast<std::size_t>(d)] += fi.data[static_cast<std::size_t>(t * fi.mel_bins + d)];
        for (auto& v : avg) v /= static_cast<double>(fi.frames);
        feats.push_back(std::move(avg));
        labels.push_back(r.label);
        folds.push_back(r.fold);
    }

    // Train centroids on folds 2-5, classify fold 1.
    std::map<std::int64_t, std::vector<double>> centroid;
    std::map<std::int64_t, int> counts;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        if (folds[i] == 1) continue;
        auto& c = centroid[labels[i]];
        if (c.empty()) c.assign(feats[i].size(), 0.0);
        for (std::size_t d = 0; d < feats[i].size(); ++d) c[d] += feats[i][d];
        counts[labels[i]]++;
    }
    for (auto& [label, c] : centroid)
        for (auto& v : c) v /= counts[label];

    int correct = 0, total = 0;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        if (folds[i] != 1) continue;
        double best = 1e300;
        std::int64_t best_label = -1;
        for (auto& [label, c] : centroid) {
            double d2 = 0.0;
            for (std::size_t d = 0; d < c.size(); ++d) {
                const double diff = feats[i][d] - c[d];
                d2 += diff * diff;
            }
            if (d2 < best) {
                best = d2;
                best_label = label;
            }
        }
        correct += best_label == labels[i];
        ++total;
    }
    REQUIRE(total > 0);
    // Learnable by construction: far above the 1/8 chance rate.
    CHECK(static_cast<double>(correct) / total > 1.0 / 8.0);
    fs::remove_all(dir);
}

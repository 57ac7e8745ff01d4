// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "mcta/audio_features.hpp"
#include "mcta/dataset.hpp"
#include "mcta/errors.hpp"
#include "mcta/feature_cache.hpp"
#include "mcta/parallel.hpp"
#include "mcta/wav.hpp"

namespace mcta {

using FeatureStore = std::unordered_map<std::string, FeatureInput>;

struct FeatureStats {
    std::size_t cache_hits = 0;
    std::size_t extracted = 0;
    std::size_t repaired = 0;  // cache entries that failed to parse and were rebuilt
};

// Loads features for every manifest row, extracting and caching on miss.
// Extraction is pure per clip, so rows are processed in parallel.
inline FeatureStats ensure_features(const Manifest& manifest, const std::string& cache_dir,
                                    const FeatureConfig& cfg, FeatureStore* store, int jobs = 1,
                                    const std::function<void(const std::string&)>& warn = {}) {
    std::filesystem::create_directories(cache_dir);
    FeatureStats stats;
    std::vector<FeatureInput> loaded(manifest.rows.size());
    std::vector<int> outcome(manifest.rows.size(), 0);  // 0 hit, 1 extracted, 2 repaired

    parallel_for(static_cast<std::int64_t>(manifest.rows.size()), jobs, [&](std::int64_t i) {
        const auto& row = manifest.rows[static_cast<std::size_t>(i)];
        FeatureInput feat;
        if (try_load_features(cache_dir, row.id, &feat)) {
            loaded[static_cast<std::size_t>(i)] = std::move(feat);
            return;
        }
        const bool stale = std::filesystem::exists(feature_cache_path(cache_dir, row.id));
        outcome[static_cast<std::size_t>(i)] = stale ? 2 : 1;
        auto wav = load_wav(manifest.resolve_path(row));
        AudioClip clip{std::move(wav.samples), wav.sample_rate, row.label, row.fold, row.id};
        feat = make_input(clip, cfg);
        save_features(cache_dir, feat);
        loaded[static_cast<std::size_t>(i)] = std::move(feat);
    });

    for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
        if (outcome[i] == 1) ++stats.extracted;
        if (outcome[i] == 2) {
            ++stats.repaired;
            if (warn) warn("re-extracted corrupt cache entry for '" + manifest.rows[i].id + "'");
        }
        if (outcome[i] == 0) ++stats.cache_hits;
        if (store) (*store)[manifest.rows[i].id] = std::move(loaded[i]);
    }
    return stats;
}

}  // namespace mcta

// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.
//
// Binary tensor blob: magic "MCTA", one version byte, u32 rank, u32 dims,
// then row-major 32-bit little-endian floats. Used for feature caches and as
// the per-parameter payload inside checkpoints.

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mcta/audio_features.hpp"
#include "mcta/errors.hpp"

namespace mcta {

inline constexpr char kBlobMagic[4] = {'M', 'C', 'T', 'A'};
inline constexpr std::uint8_t kBlobVersion = 1;

struct TensorBlob {
    std::vector<std::uint32_t> dims;
    std::vector<float> values;
};

namespace detail {

inline void write_u32_le(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32_le(std::istream& in, const std::string& what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw ParseError("tensor blob: truncated " + what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_f32_le(std::ostream& out, const float* data, std::size_t n) {
    // Little-endian host: bulk write. (The build targets x86-64.)
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * 4));
}

}  // namespace detail

inline void write_blob(std::ostream& out, const TensorBlob& blob) {
    out.write(kBlobMagic, 4);
    out.put(static_cast<char>(kBlobVersion));
    detail::write_u32_le(out, static_cast<std::uint32_t>(blob.dims.size()));
    std::size_t numel = 1;
    for (std::uint32_t d : blob.dims) {
        detail::write_u32_le(out, d);
        numel *= d;
    }
    if (numel != blob.values.size()) {
        throw StateError("write_blob: dims imply " + std::to_string(numel) + " values, have " +
                         std::to_string(blob.values.size()));
    }
    detail::write_f32_le(out, blob.values.data(), blob.values.size());
}

inline TensorBlob read_blob(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kBlobMagic, 4) != 0) {
        throw ParseError("tensor blob: bad magic");
    }
    const int version = in.get();
    if (version != kBlobVersion) {
        throw ParseError("tensor blob: unsupported version " + std::to_string(version));
    }
    const std::uint32_t rank = detail::read_u32_le(in, "rank");
    if (rank > 8) throw ParseError("tensor blob: implausible rank " + std::to_string(rank));
    TensorBlob blob;
    std::size_t numel = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        blob.dims.push_back(detail::read_u32_le(in, "dims"));
        numel *= blob.dims.back();
    }
    if (numel > (std::size_t{1} << 31)) throw ParseError("tensor blob: implausible element count");
    blob.values.resize(numel);
    in.read(reinterpret_cast<char*>(blob.values.data()), static_cast<std::streamsize>(numel * 4));
    if (!in) throw ParseError("tensor blob: truncated values");
    return blob;
}

inline void save_blob_file(const std::string& path, const TensorBlob& blob) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("save_blob_file: cannot open '" + tmp + "'");
        write_blob(out, blob);
        if (!out) throw IoError("save_blob_file: short write to '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("save_blob_file: rename to '" + path + "' failed: " + ec.message());
}

inline TensorBlob load_blob_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_blob_file: cannot open '" + path + "'");
    return read_blob(in);
}

// Feature cache layout: one blob per clip at <dir>/<id>.mctaf with dims
// {3, T, F}.
inline std::string feature_cache_path(const std::string& cache_dir, const std::string& clip_id) {
    return (std::filesystem::path(cache_dir) / (clip_id + ".mctaf")).string();
}

inline void save_features(const std::string& cache_dir, const FeatureInput& feat) {
    TensorBlob blob;
    blob.dims = {3u, static_cast<std::uint32_t>(feat.frames), static_cast<std::uint32_t>(feat.mel_bins)};
    blob.values = feat.data;
    save_blob_file(feature_cache_path(cache_dir, feat.source_id), blob);
}

// Returns false (without throwing) when the cache entry is absent or fails
// to parse, so callers can re-extract.
inline bool try_load_features(const std::string& cache_dir, const std::string& clip_id, FeatureInput* out) {
    const std::string path = feature_cache_path(cache_dir, clip_id);
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    try {
        TensorBlob blob = read_blob(in);
        if (blob.dims.size() != 3 || blob.dims[0] != 3) return false;
        out->data = std::move(blob.values);
        out->frames = blob.dims[1];
        out->mel_bins = blob.dims[2];
        out->source_id = clip_id;
        return true;
    } catch (const ParseError&) {
        return false;
    }
}

}  // namespace mcta

// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.
//
// RIFF/WAVE reader and writer. Reads PCM 16/24/32-bit and 32-bit float,
// mono or stereo (stereo is downmixed by channel averaging). Writes 16-bit
// PCM mono.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mcta/errors.hpp"

namespace mcta {

struct WavData {
    std::vector<float> samples;  // mono, in [-1, 1]
    int sample_rate = 0;
};

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(static_cast<unsigned char>(x & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 16) & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 24) & 0xff));
}

inline void put_u16(std::vector<unsigned char>& v, std::uint16_t x) {
    v.push_back(static_cast<unsigned char>(x & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
}

}  // namespace detail

inline WavData load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_wav: cannot open '" + path + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw ParseError("load_wav: '" + path + "' is not a RIFF/WAVE file");
    }

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    const unsigned char* data = nullptr;
    std::size_t data_len = 0;
    bool have_fmt = false;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* tag = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t chunk_len = detail::read_u32(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + chunk_len > bytes.size()) {
            throw ParseError("load_wav: '" + path + "' has a truncated chunk at offset " + std::to_string(pos));
        }
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (chunk_len < 16) throw ParseError("load_wav: fmt chunk too small in '" + path + "'");
            format = detail::read_u16(bytes.data() + body);
            channels = detail::read_u16(bytes.data() + body + 2);
            sample_rate = detail::read_u32(bytes.data() + body + 4);
            bits = detail::read_u16(bytes.data() + body + 14);
            if (format == 0xfffe && chunk_len >= 40) {
                // WAVE_FORMAT_EXTENSIBLE: the first two bytes of the GUID
                // hold the actual format code.
                format = detail::read_u16(bytes.data() + body + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            data = bytes.data() + body;
            data_len = chunk_len;
        }
        pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
    }

    if (!have_fmt) throw ParseError("load_wav: missing fmt chunk in '" + path + "'");
    if (!data) throw ParseError("load_wav: missing data chunk in '" + path + "'");
    if (channels < 1 || channels > 2) {
        throw ParseError("load_wav: unsupported channel count " + std::to_string(channels) + " in '" + path + "'");
    }
    const bool is_float = format == 3;
    if (!is_float && format != 1) {
        throw ParseError("load_wav: unsupported codec " + std::to_string(format) + " in '" + path + "'");
    }
    if (is_float && bits != 32) {
        throw ParseError("load_wav: float WAV must be 32-bit, got " + std::to_string(bits));
    }
    if (!is_float && bits != 16 && bits != 24 && bits != 32) {
        throw ParseError("load_wav: unsupported PCM depth " + std::to_string(bits) + " in '" + path + "'");
    }

    const std::size_t bytes_per = bits / 8;
    const std::size_t frame_bytes = bytes_per * channels;
    const std::size_t nframes = data_len / frame_bytes;
    WavData out;
    out.sample_rate = static_cast<int>(sample_rate);
    out.samples.resize(nframes);
    for (std::size_t f = 0; f < nframes; ++f) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < channels; ++c) {
            const unsigned char* p = data + f * frame_bytes + c * bytes_per;
            double v = 0.0;
            if (is_float) {
                float fv;
                std::memcpy(&fv, p, 4);
                v = fv;
            } else if (bits == 16) {
                v = static_cast<double>(static_cast<std::int16_t>(detail::read_u16(p))) / 32768.0;
            } else if (bits == 24) {
                std::int32_t s = (p[0] << 8) | (p[1] << 16) | (static_cast<std::int32_t>(p[2]) << 24);
                v = static_cast<double>(s >> 8) / 8388608.0;
            } else {
                v = static_cast<double>(static_cast<std::int32_t>(detail::read_u32(p))) / 2147483648.0;
            }
            acc += v;
        }
        out.samples[f] = static_cast<float>(acc / channels);
    }
    return out;
}

// 16-bit PCM mono, via a temp file + atomic rename.
inline void save_wav(const std::string& path, const std::vector<float>& samples, int sample_rate) {
    std::vector<unsigned char> bytes;
    bytes.reserve(44 + samples.size() * 2);
    const std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * 2);
    bytes.insert(bytes.end(), {'R', 'I', 'F', 'F'});
    detail::put_u32(bytes, 36 + data_len);
    bytes.insert(bytes.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    detail::put_u32(bytes, 16);
    detail::put_u16(bytes, 1);  // PCM
    detail::put_u16(bytes, 1);  // mono
    detail::put_u32(bytes, static_cast<std::uint32_t>(sample_rate));
    detail::put_u32(bytes, static_cast<std::uint32_t>(sample_rate * 2));
    detail::put_u16(bytes, 2);
    detail::put_u16(bytes, 16);
    bytes.insert(bytes.end(), {'d', 'a', 't', 'a'});
    detail::put_u32(bytes, data_len);
    for (float s : samples) {
        // Quantizer matches the 1/32768 decode scale; clamping is symmetric
        // so full-scale input round-trips to +/-32767/32768.
        auto q = static_cast<std::int32_t>(std::lrint(static_cast<double>(s) * 32768.0));
        q = std::max(-32767, std::min(32767, q));
        detail::put_u16(bytes, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("save_wav: cannot open '" + tmp + "' for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("save_wav: short write to '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("save_wav: rename to '" + path + "' failed: " + ec.message());
}

}  // namespace mcta

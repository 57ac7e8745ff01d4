// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.
//
// Audio front-end: STFT power spectra, Slaney-style mel filterbank, dB-scaled
// log-mel, and regression deltas, combined into the 3-channel network input
// (log-mel, delta, delta-delta).

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "mcta/errors.hpp"
#include "mcta/fft.hpp"

namespace mcta {

// Mono clip as loaded from disk.
struct AudioClip {
    std::vector<float> samples;  // in [-1, 1]
    int sample_rate = 0;
    std::int64_t label = -1;
    int fold = 0;
    std::string id;
};

// 3 x T x F network input; channel 0 is log-mel in dB, channels 1 and 2 are
// its first and second regression deltas.
struct FeatureInput {
    std::vector<float> data;  // row-major 3 x T x F
    std::int64_t frames = 0;
    std::int64_t mel_bins = 0;
    std::string source_id;
};

struct FeatureConfig {
    int n_fft = 1024;
    int hop = 512;
    int n_mels = 128;
    int delta_width = 9;
    bool db_scale = true;  // false: natural log
};

inline constexpr double kLogFloor = 1e-10;  // -100 dB floor

namespace detail {

// Reflect index into [0, n); degenerates to 0 for n == 1.
inline std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
    if (n == 1) return 0;
    const std::int64_t period = 2 * (n - 1);
    std::int64_t m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - m;
}

}  // namespace detail

// Periodic Hann window of length n.
inline std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * 3.14159265358979323846 * static_cast<double>(i) /
                                    static_cast<double>(n));
    }
    return w;
}

// Power spectrogram, T x (n_fft/2 + 1). Frames are centered with reflect
// padding of n_fft/2 on both ends, so T = 1 + floor(len / hop).
inline std::vector<double> stft_power(const std::vector<float>& samples, int n_fft, int hop,
                                      std::int64_t* out_frames) {
    if (samples.empty()) throw InvalidInputError("stft_power: empty input");
    if (n_fft <= 0 || hop <= 0) throw InvalidInputError("stft_power: n_fft and hop must be positive");
    const std::int64_t len = static_cast<std::int64_t>(samples.size());
    const std::int64_t frames = 1 + len / hop;
    const std::int64_t bins = n_fft / 2 + 1;
    const std::int64_t half = n_fft / 2;
    const auto window = hann_window(static_cast<std::size_t>(n_fft));
    Fft fft(static_cast<std::size_t>(n_fft));

    std::vector<double> power(static_cast<std::size_t>(frames * bins));
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(n_fft));
    for (std::int64_t f = 0; f < frames; ++f) {
        const std::int64_t start = f * hop - half;
        for (std::int64_t i = 0; i < n_fft; ++i) {
            const std::int64_t src = detail::reflect_index(start + i, len);
            buf[static_cast<std::size_t>(i)] = {static_cast<double>(samples[static_cast<std::size_t>(src)]) *
                                                    window[static_cast<std::size_t>(i)],
                                                0.0};
        }
        fft.forward(buf);
        for (std::int64_t b = 0; b < bins; ++b) {
            power[static_cast<std::size_t>(f * bins + b)] = std::norm(buf[static_cast<std::size_t>(b)]);
        }
    }
    if (out_frames) *out_frames = frames;
    return power;
}

// Slaney mel scale: linear below 1 kHz, logarithmic above.
inline double hz_to_mel(double hz) {
    constexpr double kMinLogHz = 1000.0;
    constexpr double kMinLogMel = 15.0;
    const double logstep = std::log(6.4) / 27.0;
    return hz < kMinLogHz ? hz * 3.0 / 200.0 : kMinLogMel + std::log(hz / kMinLogHz) / logstep;
}

inline double mel_to_hz(double mel) {
    constexpr double kMinLogMel = 15.0;
    const double logstep = std::log(6.4) / 27.0;
    return mel < kMinLogMel ? mel * 200.0 / 3.0 : 1000.0 * std::exp(logstep * (mel - kMinLogMel));
}

// Triangular, area-normalized filterbank. Rows are filters: n_mels x bins.
inline std::vector<double> mel_filterbank(int sample_rate, int n_fft, int n_mels) {
    if (sample_rate <= 0) throw InvalidInputError("mel_filterbank: sample_rate must be positive");
    const std::int64_t bins = n_fft / 2 + 1;
    const double fmax = static_cast<double>(sample_rate) / 2.0;
    std::vector<double> mel_pts(static_cast<std::size_t>(n_mels) + 2);
    const double mel_lo = hz_to_mel(0.0);
    const double mel_hi = hz_to_mel(fmax);
    for (int i = 0; i < n_mels + 2; ++i) {
        mel_pts[static_cast<std::size_t>(i)] =
            mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
    }
    std::vector<double> fb(static_cast<std::size_t>(n_mels) * static_cast<std::size_t>(bins), 0.0);
    for (int m = 0; m < n_mels; ++m) {
        const double f_lo = mel_pts[static_cast<std::size_t>(m)];
        const double f_c = mel_pts[static_cast<std::size_t>(m) + 1];
        const double f_hi = mel_pts[static_cast<std::size_t>(m) + 2];
        const double enorm = 2.0 / (f_hi - f_lo);
        for (std::int64_t b = 0; b < bins; ++b) {
            const double freq = static_cast<double>(b) * static_cast<double>(sample_rate) /
                                static_cast<double>(n_fft);
            const double up = (freq - f_lo) / (f_c - f_lo);
            const double down = (f_hi - freq) / (f_hi - f_c);
            const double w = std::max(0.0, std::min(up, down));
            fb[static_cast<std::size_t>(m) * static_cast<std::size_t>(bins) + static_cast<std::size_t>(b)] =
                w * enorm;
        }
    }
    return fb;
}

// out[t][m] = 10 log10(max(power . fb^T, 1e-10)), or natural log of the same
// floored projection when db_scale is off.
inline std::vector<float> log_mel(const std::vector<double>& power, std::int64_t frames, std::int64_t bins,
                                  const std::vector<double>& fb, int n_mels, bool db_scale = true) {
    if (static_cast<std::int64_t>(fb.size()) != static_cast<std::int64_t>(n_mels) * bins) {
        throw ShapeError("log_mel: filterbank is " + std::to_string(fb.size()) + " values, expected " +
                         std::to_string(n_mels) + "x" + std::to_string(bins));
    }
    std::vector<float> out(static_cast<std::size_t>(frames) * static_cast<std::size_t>(n_mels));
    for (std::int64_t t = 0; t < frames; ++t) {
        for (int m = 0; m < n_mels; ++m) {
            double acc = 0.0;
            const double* fr = fb.data() + static_cast<std::size_t>(m) * static_cast<std::size_t>(bins);
            const double* pr = power.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(bins);
            for (std::int64_t b = 0; b < bins; ++b) acc += fr[b] * pr[b];
            acc = std::max(acc, kLogFloor);
            out[static_cast<std::size_t>(t) * static_cast<std::size_t>(n_mels) + static_cast<std::size_t>(m)] =
                static_cast<float>(db_scale ? 10.0 * std::log10(acc) : std::log(acc));
        }
    }
    return out;
}

// Local linear-regression slope over `width` frames (edge frames replicated).
// order 2 applies the operator twice.
inline std::vector<float> deltas(const std::vector<float>& feature, std::int64_t frames, std::int64_t dims,
                                 int width = 9, int order = 1) {
    if (width < 3 || width % 2 == 0) {
        throw InvalidInputError("deltas: width must be odd and >= 3, got " + std::to_string(width));
    }
    if (order < 1 || order > 2) throw InvalidInputError("deltas: order must be 1 or 2");
    const int half = (width - 1) / 2;
    double denom = 0.0;
    for (int n = 1; n <= half; ++n) denom += 2.0 * n * n;

    std::vector<float> cur = feature;
    std::vector<float> next(feature.size());
    for (int o = 0; o < order; ++o) {
        for (std::int64_t t = 0; t < frames; ++t) {
            for (std::int64_t d = 0; d < dims; ++d) {
                double acc = 0.0;
                for (int n = 1; n <= half; ++n) {
                    const std::int64_t tp = std::min(frames - 1, t + n);
                    const std::int64_t tm = std::max(std::int64_t{0}, t - n);
                    acc += n * (static_cast<double>(cur[static_cast<std::size_t>(tp * dims + d)]) -
                                static_cast<double>(cur[static_cast<std::size_t>(tm * dims + d)]));
                }
                next[static_cast<std::size_t>(t * dims + d)] = static_cast<float>(acc / denom);
            }
        }
        cur.swap(next);
    }
    return cur;
}

// Full front-end: 3 x T x 128 (log-mel, delta, delta-delta).
inline FeatureInput make_input(const AudioClip& clip, const FeatureConfig& cfg = {}) {
    if (clip.samples.empty()) throw InvalidInputError("make_input: clip '" + clip.id + "' has no samples");
    if (clip.sample_rate <= 0) {
        throw InvalidInputError("make_input: clip '" + clip.id + "' has sample rate " +
                                std::to_string(clip.sample_rate));
    }
    std::int64_t frames = 0;
    const std::int64_t bins = cfg.n_fft / 2 + 1;
    auto power = stft_power(clip.samples, cfg.n_fft, cfg.hop, &frames);
    auto fb = mel_filterbank(clip.sample_rate, cfg.n_fft, cfg.n_mels);
    auto mel = log_mel(power, frames, bins, fb, cfg.n_mels, cfg.db_scale);
    auto d1 = deltas(mel, frames, cfg.n_mels, cfg.delta_width, 1);
    auto d2 = deltas(mel, frames, cfg.n_mels, cfg.delta_width, 2);

    FeatureInput out;
    out.frames = frames;
    out.mel_bins = cfg.n_mels;
    out.source_id = clip.id;
    out.data.resize(3 * mel.size());
    std::copy(mel.begin(), mel.end(), out.data.begin());
    std::copy(d1.begin(), d1.end(), out.data.begin() + static_cast<std::ptrdiff_t>(mel.size()));
    std::copy(d2.begin(), d2.end(), out.data.begin() + 2 * static_cast<std::ptrdiff_t>(mel.size()));
    return out;
}

}  // namespace mcta

// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.
//
// Offline training-set expansion: delay-only time shift, phase-vocoder pitch
// shift, additive Gaussian noise. Each original clip yields one variant per
// augmentation, so an N-clip manifest expands to 4N rows.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "mcta/audio_features.hpp"
#include "mcta/dataset.hpp"
#include "mcta/errors.hpp"
#include "mcta/fft.hpp"
#include "mcta/parallel.hpp"
#include "mcta/rng.hpp"
#include "mcta/wav.hpp"

namespace mcta {

struct AugmentSpec {
    double max_shift_seconds = 2.5;
    double pitch_min_semitones = -4.0;
    double pitch_max_semitones = 4.0;
    bool pitch_integer = false;  // continuous by default
    double noise_factor = 0.01;
    std::uint64_t seed = 1;
};

// Delay-only shift: output[i] = 0 for i < d, input[i - d] otherwise.
inline std::vector<float> time_shift(const std::vector<float>& samples, double shift_seconds, int sample_rate) {
    if (shift_seconds < 0.0) {
        throw InvalidInputError("time_shift: negative shifts (advances) are not allowed");
    }
    const auto d = static_cast<std::size_t>(std::llround(shift_seconds * sample_rate));
    std::vector<float> out(samples.size(), 0.0f);
    for (std::size_t i = d; i < samples.size(); ++i) out[i] = samples[i - d];
    return out;
}

namespace detail {

inline constexpr int kPvFft = 1024;
inline constexpr int kPvHop = 256;

// Complex STFT with centered reflect padding; frames = 1 + len/hop.
inline std::vector<std::complex<double>> pv_stft(const std::vector<float>& x, std::int64_t* out_frames) {
    const std::int64_t len = static_cast<std::int64_t>(x.size());
    const std::int64_t frames = 1 + len / kPvHop;
    const std::int64_t bins = kPvFft / 2 + 1;
    const auto window = hann_window(kPvFft);
    Fft fft(kPvFft);
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(frames * bins));
    std::vector<std::complex<double>> buf(kPvFft);
    for (std::int64_t f = 0; f < frames; ++f) {
        const std::int64_t start = f * kPvHop - kPvFft / 2;
        for (int i = 0; i < kPvFft; ++i) {
            const std::int64_t src = reflect_index(start + i, len);
            buf[static_cast<std::size_t>(i)] = {static_cast<double>(x[static_cast<std::size_t>(src)]) * window[static_cast<std::size_t>(i)], 0.0};
        }
        fft.forward(buf);
        for (std::int64_t b = 0; b < bins; ++b) spec[static_cast<std::size_t>(f * bins + b)] = buf[static_cast<std::size_t>(b)];
    }
    *out_frames = frames;
    return spec;
}

// Weighted overlap-add inverse of one-sided spectra; returns `out_len`
// samples starting at the analysis time origin.
inline std::vector<float> pv_istft(const std::vector<std::complex<double>>& spec, std::int64_t frames,
                                   std::int64_t out_len) {
    const std::int64_t bins = kPvFft / 2 + 1;
    const auto window = hann_window(kPvFft);
    Fft fft(kPvFft);
    const std::int64_t buf_len = (frames - 1) * kPvHop + kPvFft;
    std::vector<double> acc(static_cast<std::size_t>(buf_len), 0.0);
    std::vector<double> wsum(static_cast<std::size_t>(buf_len), 0.0);
    std::vector<std::complex<double>> frame(kPvFft);
    for (std::int64_t f = 0; f < frames; ++f) {
        for (std::int64_t b = 0; b < bins; ++b) frame[static_cast<std::size_t>(b)] = spec[static_cast<std::size_t>(f * bins + b)];
        for (std::int64_t b = bins; b < kPvFft; ++b) {
            frame[static_cast<std::size_t>(b)] = std::conj(spec[static_cast<std::size_t>(f * bins + (kPvFft - b))]);
        }
        fft.inverse(frame);
        const std::int64_t base = f * kPvHop;
        for (int i = 0; i < kPvFft; ++i) {
            acc[static_cast<std::size_t>(base + i)] += frame[static_cast<std::size_t>(i)].real() * window[static_cast<std::size_t>(i)];
            wsum[static_cast<std::size_t>(base + i)] += window[static_cast<std::size_t>(i)] * window[static_cast<std::size_t>(i)];
        }
    }
    std::vector<float> out(static_cast<std::size_t>(out_len), 0.0f);
    const std::int64_t offset = kPvFft / 2;  // analysis frames were centered
    for (std::int64_t i = 0; i < out_len; ++i) {
        const std::int64_t j = i + offset;
        if (j < buf_len && wsum[static_cast<std::size_t>(j)] > 1e-8) {
            out[static_cast<std::size_t>(i)] = static_cast<float>(acc[static_cast<std::size_t>(j)] / wsum[static_cast<std::size_t>(j)]);
        }
    }
    return out;
}

// Time-stretch by `stretch` (output/input duration ratio) at constant pitch.
inline std::vector<float> pv_time_stretch(const std::vector<float>& x, double stretch) {
    const std::int64_t len = static_cast<std::int64_t>(x.size());
    const std::int64_t bins = kPvFft / 2 + 1;
    std::int64_t frames = 0;
    auto spec = pv_stft(x, &frames);

    const double step = 1.0 / stretch;  // source frames per output frame
    const auto out_frames = static_cast<std::int64_t>(std::floor(static_cast<double>(frames - 1) / step)) + 1;
    const std::int64_t out_len = std::llround(static_cast<double>(len) * stretch);

    std::vector<std::complex<double>> out_spec(static_cast<std::size_t>(out_frames * bins));
    std::vector<double> phase(static_cast<std::size_t>(bins));
    for (std::int64_t b = 0; b < bins; ++b) phase[static_cast<std::size_t>(b)] = std::arg(spec[static_cast<std::size_t>(b)]);

    constexpr double two_pi = 2.0 * 3.14159265358979323846;
    for (std::int64_t j = 0; j < out_frames; ++j) {
        const double tau = static_cast<double>(j) * step;
        const auto k = static_cast<std::int64_t>(tau);
        const double frac = tau - static_cast<double>(k);
        const std::int64_t k1 = std::min(k + 1, frames - 1);
        for (std::int64_t b = 0; b < bins; ++b) {
            const auto& c0 = spec[static_cast<std::size_t>(k * bins + b)];
            const auto& c1 = spec[static_cast<std::size_t>(k1 * bins + b)];
            const double mag = (1.0 - frac) * std::abs(c0) + frac * std::abs(c1);
            out_spec[static_cast<std::size_t>(j * bins + b)] = std::polar(mag, phase[static_cast<std::size_t>(b)]);
            // Instantaneous-frequency phase advance between analysis frames.
            const double expected = two_pi * static_cast<double>(b) * kPvHop / kPvFft;
            double dphi = std::arg(c1) - std::arg(c0) - expected;
            dphi -= two_pi * std::round(dphi / two_pi);
            phase[static_cast<std::size_t>(b)] += expected + dphi;
        }
    }
    return pv_istft(out_spec, out_frames, out_len);
}

}  // namespace detail

// Phase-vocoder time-stretch by 2^(semitones/12) followed by resampling back
// to the original length, which moves the pitch and keeps the duration.
inline std::vector<float> pitch_shift(const std::vector<float>& samples, double semitones, int sample_rate) {
    (void)sample_rate;
    if (samples.empty()) return {};
    const double sigma = std::pow(2.0, semitones / 12.0);
    auto stretched = detail::pv_time_stretch(samples, sigma);
    std::vector<float> out(samples.size(), 0.0f);
    const auto slen = static_cast<std::int64_t>(stretched.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double pos = static_cast<double>(i) * sigma;
        const auto k = static_cast<std::int64_t>(pos);
        if (k >= slen) break;
        const double frac = pos - static_cast<double>(k);
        const double a = stretched[static_cast<std::size_t>(k)];
        const double b = k + 1 < slen ? stretched[static_cast<std::size_t>(k + 1)] : a;
        out[i] = static_cast<float>((1.0 - frac) * a + frac * b);
    }
    return out;
}

// out = in + factor * n, n ~ N(0,1) i.i.d.
inline std::vector<float> add_noise(const std::vector<float>& samples, double factor, Rng& rng) {
    if (factor < 0.0) throw InvalidInputError("add_noise: factor must be >= 0");
    std::vector<float> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out[i] = static_cast<float>(static_cast<double>(samples[i]) + factor * rng.normal());
    }
    return out;
}

inline std::string variant_id(const std::string& source_id, VariantKind kind, std::uint64_t seed) {
    std::ostringstream os;
    os << source_id << "." << to_string(kind) << ".s" << seed;
    return os.str();
}

// Expands a manifest of originals: for every clip, write one time-shifted,
// one pitch-shifted, and one noise-added WAV under <audio_out_dir>, and
// return the 4x manifest (variant rows use paths relative to out_base_dir).
// Unreadable sources are collected per entry and abort the run as one report.
inline Manifest augment_manifest(const Manifest& input, const AugmentSpec& spec,
                                 const std::string& audio_out_dir, const std::string& out_base_dir,
                                 int jobs = 1) {
    if (spec.max_shift_seconds < 0 || spec.noise_factor < 0 ||
        spec.pitch_min_semitones > spec.pitch_max_semitones) {
        throw InvalidInputError("augment_manifest: invalid AugmentSpec");
    }
    for (const auto& r : input.rows) {
        if (r.variant_kind != VariantKind::Original) {
            throw InvalidInputError("augment_manifest: manifest already contains variant '" + r.id + "'");
        }
    }
    std::filesystem::create_directories(audio_out_dir);
    const auto rel_dir =
        std::filesystem::path(audio_out_dir).lexically_relative(out_base_dir);

    const std::size_t n = input.rows.size();
    std::vector<std::array<ManifestRow, 3>> variant_rows(n);
    std::vector<std::string> failures(n);

    parallel_for(static_cast<std::int64_t>(n), jobs, [&](std::int64_t idx) {
        const ManifestRow& src = input.rows[static_cast<std::size_t>(idx)];
        WavData wav;
        try {
            wav = load_wav(input.resolve_path(src));
        } catch (const std::exception& e) {
            failures[static_cast<std::size_t>(idx)] = src.id + ": " + e.what();
            return;
        }
        // One RNG stream per clip, derived from (seed, clip id), so the
        // variants are identical no matter how the loop is scheduled.
        Rng rng(derive_seed(spec.seed, src.id));

        const double shift = rng.uniform(0.0, spec.max_shift_seconds);
        double semis = rng.uniform(spec.pitch_min_semitones, spec.pitch_max_semitones);
        if (spec.pitch_integer) semis = std::round(semis);

        const std::array<std::pair<VariantKind, std::vector<float>>, 3> variants = {{
            {VariantKind::TimeShift, time_shift(wav.samples, shift, wav.sample_rate)},
            {VariantKind::PitchShift, pitch_shift(wav.samples, semis, wav.sample_rate)},
            {VariantKind::Noise, add_noise(wav.samples, spec.noise_factor, rng)},
        }};
        for (std::size_t v = 0; v < 3; ++v) {
            ManifestRow row;
            row.id = variant_id(src.id, variants[v].first, spec.seed);
            row.path = (rel_dir / (row.id + ".wav")).generic_string();
            row.label = src.label;
            row.fold = src.fold;
            row.variant_kind = variants[v].first;
            row.source_id = src.id;
            save_wav((std::filesystem::path(audio_out_dir) / (row.id + ".wav")).string(),
                     variants[v].second, wav.sample_rate);
            variant_rows[static_cast<std::size_t>(idx)][v] = std::move(row);
        }
    });

    std::string report;
    for (const auto& f : failures) {
        if (!f.empty()) report += "  " + f + "\n";
    }
    if (!report.empty()) {
        throw IoError("augment_manifest: aborted, failed entries:\n" + report);
    }

    Manifest out;
    out.base_dir = out_base_dir;
    for (std::size_t i = 0; i < n; ++i) {
        ManifestRow orig = input.rows[i];
        orig.path = input.resolve_path(orig);  // originals keep their audio in place
        out.rows.push_back(std::move(orig));
        for (auto& row : variant_rows[i]) out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace mcta

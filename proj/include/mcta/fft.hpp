// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "mcta/errors.hpp"

namespace mcta {

// Iterative radix-2 FFT. Transform sizes here are fixed powers of two
// (1024-point analysis windows), so a general mixed-radix engine would be
// dead weight.
class Fft {
public:
    explicit Fft(std::size_t n) : n_(n) {
        if (n == 0 || (n & (n - 1)) != 0) {
            throw InvalidInputError("fft: size must be a power of two, got " + std::to_string(n));
        }
        twiddles_.resize(n / 2);
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double ang = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
            twiddles_[k] = {std::cos(ang), std::sin(ang)};
        }
        bitrev_.resize(n);
        std::size_t bits = 0;
        while ((std::size_t{1} << bits) < n) ++bits;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < bits; ++b) {
                if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
            }
            bitrev_[i] = r;
        }
    }

    std::size_t size() const { return n_; }

    // In-place forward transform.
    void forward(std::vector<std::complex<double>>& buf) const { run(buf, false); }

    // In-place inverse transform (includes the 1/n scaling).
    void inverse(std::vector<std::complex<double>>& buf) const {
        run(buf, true);
        const double inv = 1.0 / static_cast<double>(n_);
        for (auto& v : buf) v *= inv;
    }

private:
    static constexpr double kPi = 3.14159265358979323846;

    void run(std::vector<std::complex<double>>& buf, bool invert) const {
        if (buf.size() != n_) {
            throw InvalidInputError("fft: buffer size " + std::to_string(buf.size()) +
                                    " does not match plan size " + std::to_string(n_));
        }
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t j = bitrev_[i];
            if (i < j) std::swap(buf[i], buf[j]);
        }
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t half = len / 2;
            const std::size_t step = n_ / len;
            for (std::size_t start = 0; start < n_; start += len) {
                for (std::size_t k = 0; k < half; ++k) {
                    std::complex<double> tw = twiddles_[k * step];
                    if (invert) tw = std::conj(tw);
                    const auto odd = buf[start + k + half] * tw;
                    const auto even = buf[start + k];
                    buf[start + k] = even + odd;
                    buf[start + k + half] = even - odd;
                }
            }
        }
    }

    std::size_t n_;
    std::vector<std::complex<double>> twiddles_;
    std::vector<std::size_t> bitrev_;
};

}  // namespace mcta

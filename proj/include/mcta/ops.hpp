// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.
//
// Differentiable ops. Each op validates shapes, computes the forward pass,
// and (when any input requires grad) attaches a backward closure to the
// output node. Reductions accumulate in double so results stay accurate and
// bitwise reproducible in the 32-bit training path.

#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "mcta/errors.hpp"
#include "mcta/gemm.hpp"
#include "mcta/rng.hpp"
#include "mcta/tensor.hpp"

namespace mcta {

enum class Activation { Elu, Relu, Sigmoid };
enum class Phase { Train, Eval };

namespace detail {

template <class T>
bool any_requires_grad(const std::vector<TensorPtr<T>>& ts) {
    for (const auto& t : ts) {
        if (t && t->requires_grad()) return true;
    }
    return false;
}

inline void check_rank(const Shape& s, std::size_t rank, const char* op, const char* what) {
    if (s.size() != rank) {
        throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                         ", got " + shape_str(s));
    }
}

// col[(Cin*Kh*Kw) x (Ho*Wo)] <- patches of x[Cin x H x W]
template <class T>
void im2col(const T* x, std::int64_t cin, std::int64_t h, std::int64_t w,
            std::int64_t kh, std::int64_t kw, std::int64_t sh, std::int64_t sw,
            std::int64_t ph, std::int64_t pw, std::int64_t ho, std::int64_t wo, T* col) {
    const std::int64_t ncols = ho * wo;
    for (std::int64_t c = 0; c < cin; ++c) {
        for (std::int64_t i = 0; i < kh; ++i) {
            for (std::int64_t j = 0; j < kw; ++j) {
                T* dst = col + ((c * kh + i) * kw + j) * ncols;
                for (std::int64_t oy = 0; oy < ho; ++oy) {
                    const std::int64_t y = oy * sh - ph + i;
                    if (y < 0 || y >= h) {
                        for (std::int64_t ox = 0; ox < wo; ++ox) dst[oy * wo + ox] = T{0};
                        continue;
                    }
                    const T* src = x + (c * h + y) * w;
                    for (std::int64_t ox = 0; ox < wo; ++ox) {
                        const std::int64_t xx = ox * sw - pw + j;
                        dst[oy * wo + ox] = (xx >= 0 && xx < w) ? src[xx] : T{0};
                    }
                }
            }
        }
    }
}

// Scatter-add of col gradients back to x.
template <class T>
void col2im_add(const T* col, std::int64_t cin, std::int64_t h, std::int64_t w,
                std::int64_t kh, std::int64_t kw, std::int64_t sh, std::int64_t sw,
                std::int64_t ph, std::int64_t pw, std::int64_t ho, std::int64_t wo, T* x) {
    const std::int64_t ncols = ho * wo;
    for (std::int64_t c = 0; c < cin; ++c) {
        for (std::int64_t i = 0; i < kh; ++i) {
            for (std::int64_t j = 0; j < kw; ++j) {
                const T* src = col + ((c * kh + i) * kw + j) * ncols;
                for (std::int64_t oy = 0; oy < ho; ++oy) {
                    const std::int64_t y = oy * sh - ph + i;
                    if (y < 0 || y >= h) continue;
                    T* dst = x + (c * h + y) * w;
                    for (std::int64_t ox = 0; ox < wo; ++ox) {
                        const std::int64_t xx = ox * sw - pw + j;
                        if (xx >= 0 && xx < w) dst[xx] += src[oy * wo + ox];
                    }
                }
            }
        }
    }
}

// Per-axis strides into b for broadcast against an output of shape `out`.
// b must have equal rank and every axis either matching or 1.
template <class T>
std::vector<std::int64_t> broadcast_strides(const Shape& out, const TensorPtr<T>& b, const char* op) {
    const Shape& bs = b->shape();
    if (bs.size() != out.size()) {
        throw ShapeError(std::string(op) + ": operand ranks differ, " + shape_str(out) + " vs " + shape_str(bs));
    }
    std::vector<std::int64_t> strides(bs.size());
    std::int64_t acc = 1;
    for (std::size_t i = bs.size(); i-- > 0;) {
        strides[i] = acc;
        acc *= bs[i];
    }
    for (std::size_t i = 0; i < bs.size(); ++i) {
        if (bs[i] == out[i]) continue;
        if (bs[i] == 1) {
            strides[i] = 0;
        } else {
            throw ShapeError(std::string(op) + ": axis " + std::to_string(i) + " mismatch, " +
                             shape_str(out) + " vs " + shape_str(bs));
        }
    }
    return strides;
}

// Walks flat indices of `out` together with the broadcast index into b.
template <class Fn>
void for_each_broadcast(const Shape& out, const std::vector<std::int64_t>& bstrides, Fn&& fn) {
    const std::int64_t n = shape_numel(out);
    std::vector<std::int64_t> idx(out.size(), 0);
    std::int64_t bi = 0;
    for (std::int64_t flat = 0; flat < n; ++flat) {
        fn(flat, bi);
        for (std::size_t ax = out.size(); ax-- > 0;) {
            ++idx[ax];
            bi += bstrides[ax];
            if (idx[ax] < out[ax]) break;
            idx[ax] = 0;
            bi -= bstrides[ax] * out[ax];
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// conv2d

template <class T>
TensorPtr<T> conv2d(const TensorPtr<T>& input, const TensorPtr<T>& weight, const TensorPtr<T>& bias,
                    std::pair<std::int64_t, std::int64_t> stride = {1, 1},
                    std::pair<std::int64_t, std::int64_t> padding = {0, 0}) {
    detail::check_rank(input->shape(), 4, "conv2d", "input");
    detail::check_rank(weight->shape(), 4, "conv2d", "weight");
    detail::check_rank(bias->shape(), 1, "conv2d", "bias");
    const std::int64_t b = input->dim(0), cin = input->dim(1), h = input->dim(2), w = input->dim(3);
    const std::int64_t cout = weight->dim(0), kh = weight->dim(2), kw = weight->dim(3);
    const auto [sh, sw] = stride;
    const auto [ph, pw] = padding;
    if (weight->dim(1) != cin) {
        throw ShapeError("conv2d: channel axis mismatch, input Cin=" + std::to_string(cin) +
                         " vs weight Cin=" + std::to_string(weight->dim(1)));
    }
    if (bias->dim(0) != cout) {
        throw ShapeError("conv2d: bias axis 0 has " + std::to_string(bias->dim(0)) +
                         " entries, weight Cout=" + std::to_string(cout));
    }
    if (sh < 1 || sw < 1) throw InvalidInputError("conv2d: stride must be >= 1");
    if (h + 2 * ph < kh) {
        throw ShapeError("conv2d: height axis too small, H=" + std::to_string(h) + " pad=" +
                         std::to_string(ph) + " < kernel " + std::to_string(kh));
    }
    if (w + 2 * pw < kw) {
        throw ShapeError("conv2d: width axis too small, W=" + std::to_string(w) + " pad=" +
                         std::to_string(pw) + " < kernel " + std::to_string(kw));
    }
    const std::int64_t ho = (h + 2 * ph - kh) / sh + 1;
    const std::int64_t wo = (w + 2 * pw - kw) / sw + 1;
    const std::int64_t kdim = cin * kh * kw;
    const std::int64_t ncols = ho * wo;

    auto out = Tensor<T>::zeros({b, cout, ho, wo}, detail::any_requires_grad<T>({input, weight, bias}));
    std::vector<T> col(static_cast<std::size_t>(kdim * ncols));
    for (std::int64_t bi = 0; bi < b; ++bi) {
        detail::im2col(input->data().data() + bi * cin * h * w, cin, h, w, kh, kw, sh, sw, ph, pw, ho, wo,
                       col.data());
        T* o = out->data().data() + bi * cout * ncols;
        gemm_nn(cout, ncols, kdim, weight->data().data(), col.data(), o);
        for (std::int64_t co = 0; co < cout; ++co) {
            const T bv = bias->data()[co];
            for (std::int64_t p = 0; p < ncols; ++p) o[co * ncols + p] += bv;
        }
    }

    if (out->requires_grad()) {
        out->attach({input, weight, bias}, [input, weight, bias, sh = sh, sw = sw, ph = ph, pw = pw, ho, wo](
                                               Tensor<T>& node) {
            const std::int64_t b = input->dim(0), cin = input->dim(1), h = input->dim(2), w = input->dim(3);
            const std::int64_t cout = weight->dim(0), kh = weight->dim(2), kw = weight->dim(3);
            const std::int64_t kdim = cin * kh * kw;
            const std::int64_t ncols = ho * wo;
            const std::vector<T>& go = node.grad();
            std::vector<T> col(static_cast<std::size_t>(kdim * ncols));
            std::vector<T> gcol(static_cast<std::size_t>(kdim * ncols));
            const bool need_x = input->requires_grad();
            const bool need_w = weight->requires_grad();
            const bool need_b = bias->requires_grad();
            for (std::int64_t bi = 0; bi < b; ++bi) {
                const T* g = go.data() + bi * cout * ncols;
                if (need_w) {
                    detail::im2col(input->data().data() + bi * cin * h * w, cin, h, w, kh, kw, sh, sw, ph,
                                   pw, ho, wo, col.data());
                    gemm_nt(cout, kdim, ncols, g, col.data(), weight->grad().data());
                }
                if (need_b) {
                    for (std::int64_t co = 0; co < cout; ++co) {
                        double acc = 0.0;
                        for (std::int64_t p = 0; p < ncols; ++p) acc += static_cast<double>(g[co * ncols + p]);
                        bias->grad()[co] += static_cast<T>(acc);
                    }
                }
                if (need_x) {
                    std::fill(gcol.begin(), gcol.end(), T{0});
                    gemm_tn(kdim, ncols, cout, weight->data().data(), g, gcol.data());
                    detail::col2im_add(gcol.data(), cin, h, w, kh, kw, sh, sw, ph, pw, ho, wo,
                                       input->grad().data() + bi * cin * h * w);
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// maxpool2d

template <class T>
TensorPtr<T> maxpool2d(const TensorPtr<T>& input, std::pair<std::int64_t, std::int64_t> kernel,
                       std::pair<std::int64_t, std::int64_t> stride) {
    detail::check_rank(input->shape(), 4, "maxpool2d", "input");
    const std::int64_t b = input->dim(0), c = input->dim(1), h = input->dim(2), w = input->dim(3);
    const auto [kh, kw] = kernel;
    const auto [sh, sw] = stride;
    if (kh < 1 || kw < 1 || sh < 1 || sw < 1) throw InvalidInputError("maxpool2d: kernel/stride must be >= 1");
    if (kh > h) {
        throw ShapeError("maxpool2d: kernel " + std::to_string(kh) + " exceeds height axis H=" + std::to_string(h));
    }
    if (kw > w) {
        throw ShapeError("maxpool2d: kernel " + std::to_string(kw) + " exceeds width axis W=" + std::to_string(w));
    }
    const std::int64_t ho = (h - kh) / sh + 1;
    const std::int64_t wo = (w - kw) / sw + 1;

    auto out = Tensor<T>::zeros({b, c, ho, wo}, input->requires_grad());
    // First-encountered max in row-major window order keeps tie-broken
    // gradients deterministic.
    std::vector<std::int64_t> argmax(static_cast<std::size_t>(out->size()));
    const T* x = input->data().data();
    T* o = out->data().data();
    std::int64_t oi = 0;
    for (std::int64_t bi = 0; bi < b; ++bi) {
        for (std::int64_t ci = 0; ci < c; ++ci) {
            const T* plane = x + (bi * c + ci) * h * w;
            const std::int64_t base = (bi * c + ci) * h * w;
            for (std::int64_t oy = 0; oy < ho; ++oy) {
                for (std::int64_t ox = 0; ox < wo; ++ox, ++oi) {
                    const std::int64_t y0 = oy * sh, x0 = ox * sw;
                    T best = plane[y0 * w + x0];
                    std::int64_t besti = y0 * w + x0;
                    for (std::int64_t i = 0; i < kh; ++i) {
                        for (std::int64_t j = 0; j < kw; ++j) {
                            const std::int64_t p = (y0 + i) * w + (x0 + j);
                            if (plane[p] > best) {
                                best = plane[p];
                                besti = p;
                            }
                        }
                    }
                    o[oi] = best;
                    argmax[static_cast<std::size_t>(oi)] = base + besti;
                }
            }
        }
    }

    if (out->requires_grad()) {
        out->attach({input}, [input, argmax = std::move(argmax)](Tensor<T>& node) {
            const std::vector<T>& go = node.grad();
            std::vector<T>& gx = input->grad();
            for (std::size_t i = 0; i < argmax.size(); ++i) {
                gx[static_cast<std::size_t>(argmax[i])] += go[i];
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// batch normalization

// Learnable affine pair plus running statistics for one batch-norm site.
template <class T>
struct BatchNormState {
    TensorPtr<T> gamma;
    TensorPtr<T> beta;
    std::vector<T> running_mean;
    std::vector<T> running_var;
    T momentum = static_cast<T>(0.1);
    T epsilon = static_cast<T>(1e-5);

    static BatchNormState<T> make(std::int64_t channels, T momentum = static_cast<T>(0.1),
                                  T epsilon = static_cast<T>(1e-5)) {
        BatchNormState<T> s;
        s.gamma = Tensor<T>::full({channels}, T{1}, true);
        s.beta = Tensor<T>::zeros({channels}, true);
        s.running_mean.assign(static_cast<std::size_t>(channels), T{0});
        s.running_var.assign(static_cast<std::size_t>(channels), T{1});
        s.momentum = momentum;
        s.epsilon = epsilon;
        return s;
    }
};

// Normalizes axis 1 of a rank-2 (B x C) or rank-4 (B x C x H x W) tensor.
// Train mode uses batch statistics and updates the running ones; Eval mode
// uses the running statistics.
template <class T>
TensorPtr<T> batchnorm(const TensorPtr<T>& input, BatchNormState<T>& state, Phase phase) {
    const std::size_t rank = input->rank();
    if (rank != 2 && rank != 4) {
        throw ShapeError("batchnorm: input must have rank 2 or 4, got " + shape_str(input->shape()));
    }
    const std::int64_t bsz = input->dim(0);
    const std::int64_t ch = input->dim(1);
    const std::int64_t spatial = rank == 4 ? input->dim(2) * input->dim(3) : 1;
    if (static_cast<std::int64_t>(state.running_mean.size()) != ch) {
        throw ShapeError("batchnorm: channel axis has " + std::to_string(ch) + " channels, state has " +
                         std::to_string(state.running_mean.size()));
    }
    const std::int64_t n = bsz * spatial;  // samples per channel
    if (phase == Phase::Train && n == 0) {
        throw InvalidInputError("batchnorm: zero-size batch in Train mode");
    }

    const T eps = state.epsilon;
    std::vector<T> mean(static_cast<std::size_t>(ch)), var(static_cast<std::size_t>(ch));
    if (phase == Phase::Train) {
        for (std::int64_t c = 0; c < ch; ++c) {
            double sum = 0.0;
            for (std::int64_t b = 0; b < bsz; ++b) {
                const T* p = input->data().data() + (b * ch + c) * spatial;
                for (std::int64_t s = 0; s < spatial; ++s) sum += static_cast<double>(p[s]);
            }
            const double mu = sum / static_cast<double>(n);
            double acc = 0.0;
            for (std::int64_t b = 0; b < bsz; ++b) {
                const T* p = input->data().data() + (b * ch + c) * spatial;
                for (std::int64_t s = 0; s < spatial; ++s) {
                    const double d = static_cast<double>(p[s]) - mu;
                    acc += d * d;
                }
            }
            mean[static_cast<std::size_t>(c)] = static_cast<T>(mu);
            var[static_cast<std::size_t>(c)] = static_cast<T>(acc / static_cast<double>(n));
        }
        // Running update: biased batch variance is rescaled to the unbiased
        // estimate, matching the usual framework convention.
        const T m = state.momentum;
        for (std::int64_t c = 0; c < ch; ++c) {
            const std::size_t ci = static_cast<std::size_t>(c);
            const T uvar = n > 1 ? var[ci] * static_cast<T>(n) / static_cast<T>(n - 1) : var[ci];
            state.running_mean[ci] = (T{1} - m) * state.running_mean[ci] + m * mean[ci];
            state.running_var[ci] = (T{1} - m) * state.running_var[ci] + m * uvar;
        }
    } else {
        mean.assign(state.running_mean.begin(), state.running_mean.end());
        var.assign(state.running_var.begin(), state.running_var.end());
    }

    auto out = Tensor<T>::zeros(input->shape(),
                                detail::any_requires_grad<T>({input, state.gamma, state.beta}));
    const T* x = input->data().data();
    T* o = out->data().data();
    for (std::int64_t b = 0; b < bsz; ++b) {
        for (std::int64_t c = 0; c < ch; ++c) {
            const std::size_t ci = static_cast<std::size_t>(c);
            const T inv = T{1} / std::sqrt(var[ci] + eps);
            const T g = state.gamma->data()[ci], be = state.beta->data()[ci], mu = mean[ci];
            const T* px = x + (b * ch + c) * spatial;
            T* po = o + (b * ch + c) * spatial;
            for (std::int64_t s = 0; s < spatial; ++s) po[s] = g * (px[s] - mu) * inv + be;
        }
    }

    if (out->requires_grad()) {
        auto gamma = state.gamma;
        auto beta = state.beta;
        const bool train = phase == Phase::Train;
        out->attach({input, gamma, beta},
                    [input, gamma, beta, mean = std::move(mean), var = std::move(var), eps, train, bsz, ch,
                     spatial](Tensor<T>& node) {
                        const std::vector<T>& go = node.grad();
                        const T* x = input->data().data();
                        const std::int64_t n = bsz * spatial;
                        for (std::int64_t c = 0; c < ch; ++c) {
                            const std::size_t ci = static_cast<std::size_t>(c);
                            const double mu = static_cast<double>(mean[ci]);
                            const double inv = 1.0 / std::sqrt(static_cast<double>(var[ci]) + static_cast<double>(eps));
                            double sum_go = 0.0, sum_go_xhat = 0.0;
                            for (std::int64_t b = 0; b < bsz; ++b) {
                                const std::int64_t base = (b * ch + c) * spatial;
                                for (std::int64_t s = 0; s < spatial; ++s) {
                                    const double g = static_cast<double>(go[base + s]);
                                    const double xhat = (static_cast<double>(x[base + s]) - mu) * inv;
                                    sum_go += g;
                                    sum_go_xhat += g * xhat;
                                }
                            }
                            if (gamma->requires_grad()) gamma->grad()[ci] += static_cast<T>(sum_go_xhat);
                            if (beta->requires_grad()) beta->grad()[ci] += static_cast<T>(sum_go);
                            if (!input->requires_grad()) continue;
                            const double gam = static_cast<double>(gamma->data()[ci]);
                            for (std::int64_t b = 0; b < bsz; ++b) {
                                const std::int64_t base = (b * ch + c) * spatial;
                                for (std::int64_t s = 0; s < spatial; ++s) {
                                    const double g = static_cast<double>(go[base + s]);
                                    const double xhat = (static_cast<double>(x[base + s]) - mu) * inv;
                                    double dx;
                                    if (train) {
                                        dx = gam * inv *
                                             (g - sum_go / static_cast<double>(n) -
                                              xhat * sum_go_xhat / static_cast<double>(n));
                                    } else {
                                        dx = gam * inv * g;
                                    }
                                    input->grad()[base + s] += static_cast<T>(dx);
                                }
                            }
                        }
                    });
    }
    return out;
}

// ---------------------------------------------------------------------------
// elementwise activations

template <class T>
TensorPtr<T> activation(const TensorPtr<T>& input, Activation kind) {
    auto out = Tensor<T>::zeros(input->shape(), input->requires_grad());
    const std::size_t n = input->data().size();
    const T* x = input->data().data();
    T* o = out->data().data();
    switch (kind) {
        case Activation::Elu:
            for (std::size_t i = 0; i < n; ++i) o[i] = x[i] > T{0} ? x[i] : std::expm1(x[i]);
            break;
        case Activation::Relu:
            for (std::size_t i = 0; i < n; ++i) o[i] = x[i] > T{0} ? x[i] : T{0};
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < n; ++i) {
                const T v = x[i];
                o[i] = v >= T{0} ? T{1} / (T{1} + std::exp(-v)) : std::exp(v) / (T{1} + std::exp(v));
            }
            break;
    }
    if (out->requires_grad()) {
        out->attach({input}, [input, kind](Tensor<T>& node) {
            const std::vector<T>& go = node.grad();
            const std::vector<T>& y = node.data();
            const T* x = input->data().data();
            std::vector<T>& gx = input->grad();
            switch (kind) {
                case Activation::Elu:
                    for (std::size_t i = 0; i < go.size(); ++i) {
                        gx[i] += go[i] * (x[i] > T{0} ? T{1} : y[i] + T{1});
                    }
                    break;
                case Activation::Relu:
                    for (std::size_t i = 0; i < go.size(); ++i) {
                        gx[i] += x[i] > T{0} ? go[i] : T{0};
                    }
                    break;
                case Activation::Sigmoid:
                    for (std::size_t i = 0; i < go.size(); ++i) {
                        gx[i] += go[i] * y[i] * (T{1} - y[i]);
                    }
                    break;
            }
        });
    }
    return out;
}

template <class T>
TensorPtr<T> elu(const TensorPtr<T>& x) { return activation(x, Activation::Elu); }
template <class T>
TensorPtr<T> relu(const TensorPtr<T>& x) { return activation(x, Activation::Relu); }
template <class T>
TensorPtr<T> sigmoid(const TensorPtr<T>& x) { return activation(x, Activation::Sigmoid); }

// ---------------------------------------------------------------------------
// reductions and reshapes

template <class T>
TensorPtr<T> reduce_sum(const TensorPtr<T>& input, std::size_t axis, bool keep) {
    if (axis >= input->rank()) {
        throw ShapeError("reduce_sum: axis " + std::to_string(axis) + " out of range for " +
                         shape_str(input->shape()));
    }
    const Shape& s = input->shape();
    std::int64_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    const std::int64_t an = s[axis];

    Shape oshape;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i == axis) {
            if (keep) oshape.push_back(1);
        } else {
            oshape.push_back(s[i]);
        }
    }
    if (oshape.empty()) oshape.push_back(1);

    auto out = Tensor<T>::zeros(oshape, input->requires_grad());
    const T* x = input->data().data();
    T* o = out->data().data();
    for (std::int64_t ou = 0; ou < outer; ++ou) {
        for (std::int64_t in = 0; in < inner; ++in) {
            double acc = 0.0;
            for (std::int64_t a = 0; a < an; ++a) {
                acc += static_cast<double>(x[(ou * an + a) * inner + in]);
            }
            o[ou * inner + in] = static_cast<T>(acc);
        }
    }
    if (out->requires_grad()) {
        out->attach({input}, [input, outer, inner, an](Tensor<T>& node) {
            const std::vector<T>& go = node.grad();
            std::vector<T>& gx = input->grad();
            for (std::int64_t ou = 0; ou < outer; ++ou) {
                for (std::int64_t a = 0; a < an; ++a) {
                    for (std::int64_t in = 0; in < inner; ++in) {
                        gx[(ou * an + a) * inner + in] += go[ou * inner + in];
                    }
                }
            }
        });
    }
    return out;
}

template <class T>
TensorPtr<T> sum_all(const TensorPtr<T>& input) {
    auto out = Tensor<T>::zeros({1}, input->requires_grad());
    double acc = 0.0;
    for (const T v : input->data()) acc += static_cast<double>(v);
    out->data()[0] = static_cast<T>(acc);
    if (out->requires_grad()) {
        out->attach({input}, [input](Tensor<T>& node) {
            const T g = node.grad()[0];
            for (auto& v : input->grad()) v += g;
        });
    }
    return out;
}

template <class T>
TensorPtr<T> reshape(const TensorPtr<T>& input, Shape new_shape) {
    if (shape_numel(new_shape) != input->size()) {
        throw ShapeError("reshape: cannot view " + shape_str(input->shape()) + " as " + shape_str(new_shape));
    }
    auto out = Tensor<T>::from(std::move(new_shape), input->data(), input->requires_grad());
    if (out->requires_grad()) {
        out->attach({input}, [input](Tensor<T>& node) {
            const std::vector<T>& go = node.grad();
            std::vector<T>& gx = input->grad();
            for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
        });
    }
    return out;
}

template <class T>
TensorPtr<T> scale(const TensorPtr<T>& input, T factor) {
    auto out = Tensor<T>::zeros(input->shape(), input->requires_grad());
    for (std::size_t i = 0; i < input->data().size(); ++i) out->data()[i] = factor * input->data()[i];
    if (out->requires_grad()) {
        out->attach({input}, [input, factor](Tensor<T>& node) {
            const std::vector<T>& go = node.grad();
            std::vector<T>& gx = input->grad();
            for (std::size_t i = 0; i < go.size(); ++i) gx[i] += factor * go[i];
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// elementwise products / quotients with channel-style broadcasting

// out = a .* b; b may have size-1 axes that broadcast against a.
template <class T>
TensorPtr<T> hadamard(const TensorPtr<T>& a, const TensorPtr<T>& b) {
    auto bstrides = detail::broadcast_strides(a->shape(), b, "hadamard");
    auto out = Tensor<T>::zeros(a->shape(), detail::any_requires_grad<T>({a, b}));
    const T* pa = a->data().data();
    const T* pb = b->data().data();
    T* po = out->data().data();
    detail::for_each_broadcast(a->shape(), bstrides, [&](std::int64_t i, std::int64_t bi) {
        po[i] = pa[i] * pb[bi];
    });
    if (out->requires_grad()) {
        out->attach({a, b}, [a, b, bstrides = std::move(bstrides)](Tensor<T>& node) {
            const std::vector<T>& go = node.grad();
            const T* pa = a->data().data();
            const T* pb = b->data().data();
            const bool need_a = a->requires_grad();
            const bool need_b = b->requires_grad();
            T* ga = need_a ? a->grad().data() : nullptr;
            T* gb = need_b ? b->grad().data() : nullptr;
            detail::for_each_broadcast(a->shape(), bstrides, [&](std::int64_t i, std::int64_t bi) {
                if (need_a) ga[i] += go[i] * pb[bi];
                if (need_b) gb[bi] += go[i] * pa[i];
            });
        });
    }
    return out;
}

// out = a ./ b; same broadcasting rules as hadamard.
template <class T>
TensorPtr<T> divide(const TensorPtr<T>& a, const TensorPtr<T>& b) {
    auto bstrides = detail::broadcast_strides(a->shape(), b, "divide");
    auto out = Tensor<T>::zeros(a->shape(), detail::any_requires_grad<T>({a, b}));
    const T* pa = a->data().data();
    const T* pb = b->data().data();
    T* po = out->data().data();
    detail::for_each_broadcast(a->shape(), bstrides, [&](std::int64_t i, std::int64_t bi) {
        po[i] = pa[i] / pb[bi];
    });
    if (out->requires_grad()) {
        out->attach({a, b}, [a, b, bstrides = std::move(bstrides)](Tensor<T>& node) {
            const std::vector<T>& go = node.grad();
            const T* pa = a->data().data();
            const T* pb = b->data().data();
            const bool need_a = a->requires_grad();
            const bool need_b = b->requires_grad();
            T* ga = need_a ? a->grad().data() : nullptr;
            T* gb = need_b ? b->grad().data() : nullptr;
            detail::for_each_broadcast(a->shape(), bstrides, [&](std::int64_t i, std::int64_t bi) {
                const T inv = T{1} / pb[bi];
                if (need_a) ga[i] += go[i] * inv;
                if (need_b) gb[bi] -= go[i] * pa[i] * inv * inv;
            });
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// linear

// out[B x K] = input[B x D] * weight[K x D]^T + bias[K]
template <class T>
TensorPtr<T> linear(const TensorPtr<T>& input, const TensorPtr<T>& weight, const TensorPtr<T>& bias) {
    detail::check_rank(input->shape(), 2, "linear", "input");
    detail::check_rank(weight->shape(), 2, "linear", "weight");
    detail::check_rank(bias->shape(), 1, "linear", "bias");
    const std::int64_t b = input->dim(0), d = input->dim(1), k = weight->dim(0);
    if (weight->dim(1) != d) {
        throw ShapeError("linear: feature axis mismatch, input D=" + std::to_string(d) + " vs weight D=" +
                         std::to_string(weight->dim(1)));
    }
    if (bias->dim(0) != k) {
        throw ShapeError("linear: bias axis 0 has " + std::to_string(bias->dim(0)) + " entries, weight K=" +
                         std::to_string(k));
    }
    auto out = Tensor<T>::zeros({b, k}, detail::any_requires_grad<T>({input, weight, bias}));
    gemm_nt(b, k, d, input->data().data(), weight->data().data(), out->data().data());
    for (std::int64_t bi = 0; bi < b; ++bi) {
        for (std::int64_t j = 0; j < k; ++j) out->data()[bi * k + j] += bias->data()[j];
    }
    if (out->requires_grad()) {
        out->attach({input, weight, bias}, [input, weight, bias, b, d, k](Tensor<T>& node) {
            const std::vector<T>& go = node.grad();
            if (input->requires_grad()) {
                gemm_nn(b, d, k, go.data(), weight->data().data(), input->grad().data());
            }
            if (weight->requires_grad()) {
                gemm_tn(k, d, b, go.data(), input->data().data(), weight->grad().data());
            }
            if (bias->requires_grad()) {
                for (std::int64_t j = 0; j < k; ++j) {
                    double acc = 0.0;
                    for (std::int64_t bi = 0; bi < b; ++bi) acc += static_cast<double>(go[bi * k + j]);
                    bias->grad()[j] += static_cast<T>(acc);
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// dropout

template <class T>
TensorPtr<T> dropout(const TensorPtr<T>& input, double rate, Phase phase, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw InvalidInputError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
    }
    auto out = Tensor<T>::zeros(input->shape(), input->requires_grad());
    const std::size_t n = input->data().size();
    if (phase == Phase::Eval || rate == 0.0) {
        out->data() = input->data();
        if (out->requires_grad()) {
            out->attach({input}, [input](Tensor<T>& node) {
                const std::vector<T>& go = node.grad();
                std::vector<T>& gx = input->grad();
                for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
            });
        }
        return out;
    }
    const T inv_keep = static_cast<T>(1.0 / (1.0 - rate));
    std::vector<std::uint8_t> mask(n);
    for (std::size_t i = 0; i < n; ++i) {
        mask[i] = rng.uniform01() >= rate ? 1 : 0;
        out->data()[i] = mask[i] ? input->data()[i] * inv_keep : T{0};
    }
    if (out->requires_grad()) {
        out->attach({input}, [input, mask = std::move(mask), inv_keep](Tensor<T>& node) {
            const std::vector<T>& go = node.grad();
            std::vector<T>& gx = input->grad();
            for (std::size_t i = 0; i < go.size(); ++i) {
                if (mask[i]) gx[i] += go[i] * inv_keep;
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// softmax cross-entropy

// Mean over the batch of -log softmax(logits)[label], stabilized by
// max-subtraction. Gradient is (softmax - onehot) / B.
template <class T>
TensorPtr<T> softmax_cross_entropy(const TensorPtr<T>& logits, const std::vector<std::int64_t>& labels) {
    detail::check_rank(logits->shape(), 2, "softmax_cross_entropy", "logits");
    const std::int64_t b = logits->dim(0), k = logits->dim(1);
    if (static_cast<std::int64_t>(labels.size()) != b) {
        throw InvalidInputError("softmax_cross_entropy: got " + std::to_string(labels.size()) +
                                " labels for batch of " + std::to_string(b));
    }
    for (std::int64_t i = 0; i < b; ++i) {
        if (labels[static_cast<std::size_t>(i)] < 0 || labels[static_cast<std::size_t>(i)] >= k) {
            throw InvalidInputError("softmax_cross_entropy: label " +
                                    std::to_string(labels[static_cast<std::size_t>(i)]) + " at row " +
                                    std::to_string(i) + " outside [0, " + std::to_string(k) + ")");
        }
    }
    auto out = Tensor<T>::zeros({1}, logits->requires_grad());
    const T* x = logits->data().data();
    double total = 0.0;
    for (std::int64_t i = 0; i < b; ++i) {
        const T* row = x + i * k;
        double m = static_cast<double>(row[0]);
        for (std::int64_t j = 1; j < k; ++j) m = std::max(m, static_cast<double>(row[j]));
        double lse = 0.0;
        for (std::int64_t j = 0; j < k; ++j) lse += std::exp(static_cast<double>(row[j]) - m);
        lse = m + std::log(lse);
        total += lse - static_cast<double>(row[labels[static_cast<std::size_t>(i)]]);
    }
    out->data()[0] = static_cast<T>(total / static_cast<double>(b));

    if (out->requires_grad()) {
        out->attach({logits}, [logits, labels, b, k](Tensor<T>& node) {
            const T g = node.grad()[0];
            const T* x = logits->data().data();
            std::vector<T>& gx = logits->grad();
            for (std::int64_t i = 0; i < b; ++i) {
                const T* row = x + i * k;
                double m = static_cast<double>(row[0]);
                for (std::int64_t j = 1; j < k; ++j) m = std::max(m, static_cast<double>(row[j]));
                double denom = 0.0;
                for (std::int64_t j = 0; j < k; ++j) denom += std::exp(static_cast<double>(row[j]) - m);
                for (std::int64_t j = 0; j < k; ++j) {
                    const double p = std::exp(static_cast<double>(row[j]) - m) / denom;
                    const double onehot = j == labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
                    gx[i * k + j] += g * static_cast<T>((p - onehot) / static_cast<double>(b));
                }
            }
        });
    }
    return out;
}

}  // namespace mcta

// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mcta/errors.hpp"
#include "mcta/tensor.hpp"

namespace mcta {

// Per-parameter Adam moment buffers.
template <class T>
struct AdamState {
    std::vector<T> m;
    std::vector<T> v;
    std::int64_t step = 0;
    T beta1 = static_cast<T>(0.9);
    T beta2 = static_cast<T>(0.999);
    T epsilon = static_cast<T>(1e-8);

    static AdamState<T> make(std::int64_t param_size) {
        AdamState<T> s;
        s.m.assign(static_cast<std::size_t>(param_size), T{0});
        s.v.assign(static_cast<std::size_t>(param_size), T{0});
        return s;
    }
};

// Standard Adam update with bias correction; clears grads afterwards so each
// step starts from a clean tape.
template <class T>
void adam_step(const std::vector<TensorPtr<T>>& params, std::vector<AdamState<T>>& states, T lr) {
    if (params.size() != states.size()) {
        throw StateError("adam_step: " + std::to_string(params.size()) + " params vs " +
                         std::to_string(states.size()) + " states");
    }
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi];
        auto& st = states[pi];
        if (!p->has_grad()) {
            throw StateError("adam_step: parameter " + std::to_string(pi) +
                             " has no gradient; run backward first");
        }
        if (st.m.size() != p->data().size()) {
            throw StateError("adam_step: state size " + std::to_string(st.m.size()) +
                             " does not match parameter size " + std::to_string(p->data().size()));
        }
        st.step += 1;
        const T b1 = st.beta1, b2 = st.beta2;
        const T bc1 = T{1} - static_cast<T>(std::pow(static_cast<double>(b1), static_cast<double>(st.step)));
        const T bc2 = T{1} - static_cast<T>(std::pow(static_cast<double>(b2), static_cast<double>(st.step)));
        std::vector<T>& data = p->data();
        const std::vector<T>& grad = p->grad();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const T g = grad[i];
            st.m[i] = b1 * st.m[i] + (T{1} - b1) * g;
            st.v[i] = b2 * st.v[i] + (T{1} - b2) * g * g;
            const T mhat = st.m[i] / bc1;
            const T vhat = st.v[i] / bc2;
            data[i] -= lr * mhat / (std::sqrt(vhat) + st.epsilon);
        }
    }
    for (auto& p : params) p->zero_grad();
}

}  // namespace mcta

// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "mcta/rng.hpp"
#include "mcta/tensor.hpp"

namespace mcta {

// Central finite-difference check of reverse-mode gradients, 64-bit only.
// `forward` must rebuild the graph from the current parameter values and
// return the scalar loss; any internal randomness has to be re-seeded per
// call so both probe evaluations see the same draws.
struct GradCheckResult {
    double max_rel_err = 0.0;
    std::int64_t checked = 0;
};

inline double rel_err(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom;
}

inline GradCheckResult gradcheck(const std::vector<TensorPtr<double>>& params,
                                 const std::function<TensorPtr<double>()>& forward,
                                 double h = 1e-5, std::int64_t samples_per_param = 20,
                                 std::uint64_t seed = 0x6d637461) {
    for (auto& p : params) p->clear_grad();
    auto loss = forward();
    loss->backward();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (auto& p : params) analytic.push_back(p->grad());

    GradCheckResult result;
    Rng rng(seed);
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi];
        const std::int64_t n = p->size();
        const std::int64_t count = std::min<std::int64_t>(n, samples_per_param);
        for (std::int64_t s = 0; s < count; ++s) {
            const std::size_t i = count == n ? static_cast<std::size_t>(s)
                                             : static_cast<std::size_t>(rng.uniform_int(static_cast<std::uint64_t>(n)));
            const double orig = p->data()[i];
            p->data()[i] = orig + h;
            const double fp = forward()->item();
            p->data()[i] = orig - h;
            const double fm = forward()->item();
            p->data()[i] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            result.max_rel_err = std::max(result.max_rel_err, rel_err(analytic[pi][i], numeric));
            ++result.checked;
        }
    }
    for (auto& p : params) p->clear_grad();
    return result;
}

}  // namespace mcta

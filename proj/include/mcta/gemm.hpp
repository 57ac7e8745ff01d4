// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <cstdint>

namespace mcta {

// Small row-major GEMM kernels backing conv2d and linear. Loop orders are
// fixed so accumulation order (and therefore the result) is deterministic.
// All kernels accumulate into C.

// C[M x N] += A[M x K] * B[K x N]
template <class T>
void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k,
             const T* a, const T* b, T* c) {
    for (std::int64_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (std::int64_t p = 0; p < k; ++p) {
            const T av = arow[p];
            const T* brow = b + p * n;
            for (std::int64_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

// C[M x N] += A[M x K] * B[N x K]^T   (dot products of rows)
template <class T>
void gemm_nt(std::int64_t m, std::int64_t n, std::int64_t k,
             const T* a, const T* b, T* c) {
    for (std::int64_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (std::int64_t j = 0; j < n; ++j) {
            const T* brow = b + j * k;
            T acc{0};
            for (std::int64_t p = 0; p < k; ++p) {
                acc += arow[p] * brow[p];
            }
            crow[j] += acc;
        }
    }
}

// C[M x N] += A[K x M]^T * B[K x N]
template <class T>
void gemm_tn(std::int64_t m, std::int64_t n, std::int64_t k,
             const T* a, const T* b, T* c) {
    for (std::int64_t p = 0; p < k; ++p) {
        const T* arow = a + p * m;
        const T* brow = b + p * n;
        for (std::int64_t i = 0; i < m; ++i) {
            const T av = arow[i];
            T* crow = c + i * n;
            for (std::int64_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

}  // namespace mcta

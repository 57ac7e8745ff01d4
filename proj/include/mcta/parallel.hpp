// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace mcta {

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work items must be
// independent; results keyed by index stay deterministic regardless of the
// schedule. The first exception is rethrown on the calling thread.
inline void parallel_for(std::int64_t n, int jobs, const std::function<void(std::int64_t)>& fn) {
    if (n <= 0) return;
    if (jobs < 1) jobs = 1;
    jobs = static_cast<int>(std::min<std::int64_t>(jobs, n));
    if (jobs == 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) {
        workers.emplace_back([&] {
            for (;;) {
                const std::int64_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace mcta

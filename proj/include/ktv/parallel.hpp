// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ktv {

/// Worker count used when a caller passes 0.
inline std::size_t default_workers() {
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) over contiguous chunks on up to `workers`
/// threads. fn must only write state owned by index i. The first exception
/// thrown by any chunk is rethrown on the caller's thread.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    if (workers == 0) {
        workers = default_workers();
    }
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }

    std::exception_ptr first_error;
    std::mutex error_mutex;
    const std::size_t chunk = (n + workers - 1) / workers;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin >= end) {
                break;
            }
            pool.emplace_back([&, begin, end] {
                try {
                    for (std::size_t i = begin; i < end; ++i) {
                        fn(i);
                    }
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                }
            });
        }
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

}  // namespace ktv

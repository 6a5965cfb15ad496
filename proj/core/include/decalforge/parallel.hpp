// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace decalforge {

inline int worker_count() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

/// Runs fn(chunk_begin, chunk_end, chunk_index) over contiguous chunks of
/// [begin, end). Chunk boundaries depend only on the range and worker count.
template <typename Fn>
void parallel_chunks(int begin, int end, Fn&& fn, int workers = 0) {
    const int n = end - begin;
    if (n <= 0) {
        return;
    }
    if (workers <= 0) {
        workers = worker_count();
    }
    workers = std::clamp(workers, 1, n);
    if (workers == 1) {
        fn(begin, end, 0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) {
        const int b = begin + static_cast<int>(static_cast<long long>(n) * t / workers);
        const int e = begin + static_cast<int>(static_cast<long long>(n) * (t + 1) / workers);
        pool.emplace_back([&fn, b, e, t] { fn(b, e, t); });
    }
    for (auto& th : pool) {
        th.join();
    }
}

template <typename Fn>
void parallel_for(int begin, int end, Fn&& fn, int workers = 0) {
    parallel_chunks(
        begin, end,
        [&fn](int b, int e, int) {
            for (int i = b; i < e; ++i) {
                fn(i);
            }
        },
        workers);
}

} // namespace decalforge

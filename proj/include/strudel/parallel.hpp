// Deterministic data parallelism.
//
// parallel_for splits an index range into contiguous chunks, one per
// worker. Each index must write only to its own output slot; no RNG or
// accumulator may be shared. Under that contract the result is identical
// for any thread count, including 1.
//
// The STRUDEL_THREADS environment variable caps the worker count.
#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace strudel {

inline int max_threads() {
    if (const char* env = std::getenv("STRUDEL_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, int threads = -1) {
    if (n == 0) return;
    int t = threads > 0 ? threads : max_threads();
    t = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(t), n));
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(t) - 1);
    const std::size_t chunk = (n + static_cast<std::size_t>(t) - 1) / static_cast<std::size_t>(t);
    auto run_range = [&fn](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
    };
    for (int w = 1; w < t; ++w) {
        std::size_t lo = std::min(n, chunk * static_cast<std::size_t>(w));
        std::size_t hi = std::min(n, lo + chunk);
        if (lo < hi) workers.emplace_back(run_range, lo, hi);
    }
    run_range(0, std::min(n, chunk));
    for (auto& w : workers) w.join();
}

}  // namespace strudel

#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace fleet {

inline unsigned resolve_threads(unsigned hint) {
    if (hint != 0) return hint;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

// Static block partition over [0, n). Each index is processed exactly once and
// must write only to its own output slot; results are then independent of the
// schedule and of the thread count. fn must not throw.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    threads = resolve_threads(threads);
    if (threads > n) threads = static_cast<unsigned>(n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned k = 0; k < threads; ++k) {
        const std::size_t begin = n * k / threads;
        const std::size_t end = n * (k + 1) / threads;
        pool.emplace_back([&fn, begin, end] {
            for (std::size_t i = begin; i < end; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace fleet

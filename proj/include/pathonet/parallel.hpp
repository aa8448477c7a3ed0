#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace pathonet {

// Worker count used by the conv kernels and the CLI batch loops.
// 0 means "hardware concurrency". Results never depend on the thread count:
// work items own disjoint output ranges and each item runs a fixed loop order.
inline int& thread_setting() {
    static int n = 0;
    return n;
}

inline void set_threads(int n) { thread_setting() = n < 0 ? 0 : n; }

inline int effective_threads() {
    int n = thread_setting();
    if (n == 0) {
        unsigned hw = std::thread::hardware_concurrency();
        n = hw == 0 ? 1 : static_cast<int>(hw);
    }
    return n;
}

// Runs fn(i) for i in [0, count). Serial when one thread suffices.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    int threads = effective_threads();
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    int spawn = std::min<int>(threads, static_cast<int>(count));
    pool.reserve(static_cast<std::size_t>(spawn) - 1);
    for (int t = 1; t < spawn; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

}  // namespace pathonet

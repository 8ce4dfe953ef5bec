#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "takvar/types.hpp"

namespace takvar {

/// Worker cap: TAKVAR_THREADS when set (minimum 1), otherwise 1.
/// Single-threaded by default so benchmark timings never contend.
inline index_t thread_count() {
    static const index_t cached = [] {
        const char* env = std::getenv("TAKVAR_THREADS");
        if (!env) return index_t{1};
        const long v = std::strtol(env, nullptr, 10);
        if (v <= 1) return index_t{1};
        const long hw = static_cast<long>(std::thread::hardware_concurrency());
        return static_cast<index_t>(std::min(v, std::max(hw, 1L)));
    }();
    return cached;
}

/// Run fn(begin, end, worker_index) over contiguous chunks of [0, total).
/// Chunk boundaries depend only on `total` and the worker cap, so output
/// written to disjoint slots is deterministic.
template <typename Fn>
void parallel_for(index_t total, Fn&& fn) {
    const index_t workers = std::min<index_t>(thread_count(), std::max<index_t>(total, 1));
    if (workers <= 1 || total <= 1) {
        fn(index_t{0}, total, index_t{0});
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    const index_t chunk = (total + workers - 1) / workers;
    for (index_t w = 0; w < workers; ++w) {
        const index_t begin = w * chunk;
        const index_t end = std::min(total, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end, w] { fn(begin, end, w); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace takvar

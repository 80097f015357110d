#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace tractosurv {

// Static block partition of [0, n) across `workers` threads. Each worker owns
// a contiguous index range and writes only to its own slots, so results are
// identical for any worker count.
template <typename Fn>
void parallel_for_blocks(std::size_t n, int workers, Fn&& body) {
    if (workers < 1) workers = 1;
    if (n == 0) return;
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    if (w == 1) {
        body(std::size_t{0}, n, 0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(w);
    const std::size_t chunk = (n + w - 1) / w;
    for (std::size_t t = 0; t < w; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&body, begin, end, t] { body(begin, end, static_cast<int>(t)); });
    }
    for (auto& th : pool) th.join();
}

} // namespace tractosurv

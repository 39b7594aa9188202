#pragma once
#include <thread>
#include <vector>
#include <functional>
#include <atomic>
#include <cstdint>

namespace tf {

// Runs worker(begin, end) over [0, total) split into fixed-size chunks.
// Chunk boundaries are independent of the thread count; workers must write
// only to disjoint per-index slots so results are byte-identical for any
// number of threads. Callers combine chunk results in index order.
inline void parallel_for(int64_t total, int threads,
                         const std::function<void(int64_t, int64_t)>& worker,
                         int64_t chunk = 1024) {
    if (total <= 0) return;
    if (threads < 1) threads = 1;
    int64_t nchunks = (total + chunk - 1) / chunk;
    if (threads == 1 || nchunks == 1) {
        worker(0, total);
        return;
    }
    std::atomic<int64_t> next{0};
    auto run = [&]() {
        for (;;) {
            int64_t c = next.fetch_add(1);
            if (c >= nchunks) break;
            int64_t b = c * chunk;
            int64_t e = std::min(total, b + chunk);
            worker(b, e);
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
}

} // namespace tf

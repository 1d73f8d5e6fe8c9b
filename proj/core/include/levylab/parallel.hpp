#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace levylab {

inline int default_workers() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(chunk_index, begin, end) over [0, n) split into fixed-size chunks.
// Partial results live in per-chunk slots, so the reduction order downstream
// is independent of thread scheduling and results stay bit-reproducible.
template <class Partial>
std::vector<Partial> parallel_chunks(long n, long chunk_size, int workers,
                                     const std::function<Partial(long, long, long)>& fn) {
    if (chunk_size <= 0) chunk_size = 1;
    const long n_chunks = (n + chunk_size - 1) / chunk_size;
    std::vector<Partial> partials(static_cast<std::size_t>(std::max(n_chunks, 0L)));
    if (n_chunks <= 0) return partials;

    workers = static_cast<int>(std::max<long>(1, std::min<long>(workers, n_chunks)));
    std::atomic<long> next{0};
    auto worker = [&]() {
        while (true) {
            const long c = next.fetch_add(1);
            if (c >= n_chunks) return;
            const long lo = c * chunk_size;
            const long hi = std::min(n, lo + chunk_size);
            partials[static_cast<std::size_t>(c)] = fn(c, lo, hi);
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return partials;
}

}  // namespace levylab

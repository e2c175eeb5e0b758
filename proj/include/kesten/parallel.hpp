#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace kesten {

/// Run fn(replicate_index) for every index in [0, n) on a fixed pool of
/// `workers` threads.  Work is keyed by replicate index, never by worker, and
/// any per-replicate output must be written to a preallocated slot, so the
/// result is byte-identical for every worker count.
template <typename F>
void parallel_replicates(std::size_t n, unsigned workers, F&& fn) {
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    workers = std::min<unsigned>(workers, static_cast<unsigned>(n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace kesten

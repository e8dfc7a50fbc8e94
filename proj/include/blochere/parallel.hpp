// Index-ordered work distribution. Results never depend on the worker count:
// workers only decide who computes a block, never what goes into it.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace blochere {

/// Worker count from the argument, else BLOCH_ERE_WORKERS, else hardware.
unsigned resolve_workers(unsigned requested);

/// Calls fn(block) for block in [0, n_blocks) across `workers` threads. The
/// exception from the lowest failing block is rethrown after all threads join.
template <typename Fn>
void parallel_blocks(std::size_t n_blocks, unsigned workers, Fn&& fn) {
    workers = std::max(1u, workers);
    if (workers == 1 || n_blocks <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) fn(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::size_t first_error_block = n_blocks;
    auto worker = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            try {
                fn(b);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (b < first_error_block) {
                    first_error_block = b;
                    first_error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    const auto n_threads = std::min<std::size_t>(workers, n_blocks);
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

/// Pairwise reduction of items in index order.
template <typename T, typename Merge>
T tree_reduce(std::vector<T> items, Merge&& merge) {
    while (items.size() > 1) {
        std::vector<T> next;
        next.reserve((items.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < items.size(); i += 2) next.push_back(merge(items[i], items[i + 1]));
        if (items.size() % 2 == 1) next.push_back(std::move(items.back()));
        items = std::move(next);
    }
    return std::move(items.front());
}

}  // namespace blochere

#pragma once

// Chunked integer reductions over an index range. Results are exact sums, so
// they do not depend on the number of threads.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace abac::detail {

template <typename Fn>
std::int64_t parallel_sum(std::size_t n, unsigned threads, Fn&& fn) {
    constexpr std::size_t kMinChunk = 2048;
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(threads, n / kMinChunk));
    if (workers <= 1) {
        std::int64_t total = 0;
        for (std::size_t i = 0; i < n; ++i) total += fn(i);
        return total;
    }
    std::vector<std::int64_t> partial(workers, 0);
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t lo = w * chunk;
            const std::size_t hi = std::min(n, lo + chunk);
            std::int64_t local = 0;
            for (std::size_t i = lo; i < hi; ++i) local += fn(i);
            partial[w] = local;
        });
    }
    pool.clear();
    std::int64_t total = 0;
    for (auto v : partial) total += v;
    return total;
}

/// Applies fn(i) for every i, writing into caller-owned per-index slots.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    constexpr std::size_t kMinChunk = 512;
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(threads, n / kMinChunk));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    const std::size_t lo = w * chunk;
                    const std::size_t hi = std::min(n, lo + chunk);
                    for (std::size_t i = lo; i < hi; ++i) fn(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace abac::detail

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sida {

/**
 * Runs fn(i) for i in [0, n) on up to `workers` threads. Tasks are pulled
 * from a shared counter, so callers must write results into slot i rather
 * than appending. The first exception thrown by any task is rethrown after
 * all threads have joined.
 */
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn)
{
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };

    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    pool.clear();

    if (first_error) std::rethrow_exception(first_error);
}

} // namespace sida

#pragma once

// Minimal fork-join helper. Work items are indexed; results are written by
// index, so any reduction done afterwards in index order is deterministic.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace jdcredit {

/// Worker count: JDCREDIT_WORKERS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
[[nodiscard]] inline unsigned default_workers()
{
    if (const char* env = std::getenv("JDCREDIT_WORKERS")) {
        try {
            const long n = std::stol(env);
            if (n > 0)
                return static_cast<unsigned>(n);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls body(i) for i in [0, count) on up to `workers` threads. The first
/// exception thrown by any item is rethrown after all threads have joined.
template <typename Body>
void parallel_for(std::size_t count, Body&& body, unsigned workers = default_workers())
{
    workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count)
                return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w)
        threads.emplace_back(run);
    run();
    for (auto& t : threads)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace jdcredit

#pragma once

#include <cstddef>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace xkde {

// Run fn(i) for i in [0, n) on up to max_threads workers and collect results
// in index order, so output is deterministic regardless of scheduling.
// max_threads <= 1 degenerates to a plain loop.
template <typename Result>
std::vector<Result> parallel_map(std::size_t n, std::size_t max_threads,
                                 const std::function<Result(std::size_t)>& fn) {
    std::vector<Result> out(n);
    if (n == 0) return out;
    if (max_threads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    const std::size_t workers = std::min(max_threads, n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    out[i] = fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    next.store(n); // stop handing out work
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

} // namespace xkde

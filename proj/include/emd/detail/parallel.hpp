#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace emd::detail {

/// Runs fn(i) for i in [0, n) on up to max_workers threads. Work items are
/// handed out in index order; after the first exception no new items start
/// and that exception is rethrown once all workers have joined.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t max_workers, Fn&& fn)
{
    auto workers = std::min(n, std::max<std::size_t>(max_workers, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (!failed.load()) {
                    auto i = next.fetch_add(1);
                    if (i >= n) {
                        return;
                    }
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!first_error) {
                            first_error = std::current_exception();
                        }
                        failed.store(true);
                    }
                }
            });
        }
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

}  // namespace emd::detail

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace simulsa {

// Runs fn(i) for i in [begin, end) on up to `jobs` threads. The first
// exception stops scheduling further indices and is rethrown.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, unsigned jobs, Fn &&fn) {
    if (begin >= end) return;
    const auto workers = static_cast<std::size_t>(std::max(1u, jobs));
    if (workers == 1 || end - begin == 1) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{begin};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mu;
    auto work = [&] {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= end) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    std::vector<std::thread> pool;
    const auto count = std::min(workers, end - begin);
    pool.reserve(count);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(work);
    for (auto &t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace simulsa

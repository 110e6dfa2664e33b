#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace qmem {

/// Number of workers for `jobs`; 0 means hardware concurrency.
inline unsigned resolve_jobs(unsigned jobs)
{
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    return jobs;
}

/// Calls fn(i) for i in [0, n) on up to `jobs` threads. Indices are handed
/// out in ascending order; results must be written to per-index slots.
/// The first exception thrown by fn is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn)
{
    jobs = std::min<unsigned>(resolve_jobs(jobs), static_cast<unsigned>(std::max<std::size_t>(n, 1)));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first;
    std::atomic_flag lock = ATOMIC_FLAG_INIT;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                while (lock.test_and_set()) {}
                if (!first) first = std::current_exception();
                lock.clear();
                failed = true;
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

} // namespace qmem

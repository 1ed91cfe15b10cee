#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace svl
{
//! Default worker count: hardware concurrency, at least one.
inline int default_workers()
{
    return std::max(1, int(std::thread::hardware_concurrency()));
}

/*!
 * Run fn(i) for i in [0, n) on a bounded pool of threads.
 *
 * Tasks are claimed from a shared counter, so results must be written to
 * per-index slots by the caller. The first exception is rethrown after all
 * workers have joined.
 */
template<class F>
void parallel_for(std::size_t n, int workers, F&& fn)
{
    workers = std::max(1, std::min<int>(workers, int(n)));
    if (workers <= 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++)
            {
                try
                {
                    fn(i);
                }
                catch (...)
                {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                }
            }
        });
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}
}  // namespace svl

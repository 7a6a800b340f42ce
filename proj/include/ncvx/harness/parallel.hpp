#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ncvx::harness {

/// Runs fn(i) for i in [0, count) on `workers` threads over a shared work
/// queue. Callers store results into index-addressed slots, so the outcome is
/// independent of scheduling. The first unexpected exception is rethrown after
/// all threads join (per-task failures that should be tolerated must be caught
/// inside fn).
template <typename Fn>
void parallel_for(long count, int workers, Fn&& fn) {
    if (count <= 0) return;
    workers = static_cast<int>(std::max<long>(1, std::min<long>(workers, count)));
    if (workers == 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const long i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace ncvx::harness

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace fbq {

// Evaluates f(0), ..., f(count-1) on up to `threads` worker threads and
// returns the results in index order, so the output never depends on the
// thread count. The first exception thrown by any task is rethrown.
template <class F>
auto parallel_map(std::size_t count, unsigned threads, F &&f) -> std::vector<decltype(f(std::size_t{}))> {
    using Result = decltype(f(std::size_t{}));
    static_assert(!std::is_same_v<Result, bool>, "std::vector<bool> elements cannot be written concurrently");
    std::vector<Result> out(count);
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = f(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    out[i] = f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto &t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace fbq

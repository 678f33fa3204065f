#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace reviewkit {

// Runs fn(i) for i in [0, count) with at most max_concurrency worker
// threads. Results land at their index, so output order is deterministic
// regardless of scheduling; if any call throws, the exception from the
// lowest index is rethrown.
template <typename Result>
std::vector<Result> parallel_map(size_t count, int max_concurrency,
                                 const std::function<Result(size_t)>& fn) {
    std::vector<Result> results(count);
    if (count == 0) return results;

    const int workers = std::max(1, std::min<int>(max_concurrency, static_cast<int>(count)));
    if (workers == 1) {
        for (size_t i = 0; i < count; ++i) results[i] = fn(i);
        return results;
    }

    std::atomic<size_t> next{0};
    std::mutex error_mutex;
    size_t error_index = count;
    std::exception_ptr error;

    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                results[i] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    if (error) std::rethrow_exception(error);
    return results;
}

} // namespace reviewkit

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ospde {

/// Evaluates fn(i) for i in [0, n) on up to `workers` threads; results are returned in index order,
/// so the outcome does not depend on the worker count. The first exception is rethrown.
template <class Fn>
auto parallel_map(std::size_t n, std::size_t workers, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using T = decltype(fn(std::size_t{}));
    std::vector<T> out(n);
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::exception_ptr error;
    std::mutex guard;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) {
                try {
                    out[i] = fn(i);
                } catch (...) {
                    std::lock_guard lock(guard);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

inline std::size_t default_workers() {
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace ospde

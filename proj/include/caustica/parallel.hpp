#ifndef CAUSTICA_PARALLEL_HPP
#define CAUSTICA_PARALLEL_HPP

#include <algorithm>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace caustica {

/// Indexed parallel sweep: fn(i) for i in [0, n). Results must be written to
/// index i of a preallocated container, which keeps outputs deterministic
/// regardless of the thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         int threads = 1) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const int nt = std::min<std::size_t>(std::size_t(threads), n);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(std::size_t(nt), nullptr);
    for (int t = 0; t < nt; ++t) {
        pool.emplace_back([&, t]() {
            try {
                for (std::size_t i = std::size_t(t); i < n; i += std::size_t(nt)) fn(i);
            } catch (...) {
                errors[std::size_t(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace caustica

#endif

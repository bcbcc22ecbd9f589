#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace plugsense {

inline unsigned default_jobs() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work items must be
/// independent. If any item throws, remaining work is abandoned and the
/// lowest-index exception recorded is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
    if (n == 0) return;
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::min<std::size_t>(n, 1u << 16))));
    std::vector<std::exception_ptr> errors(n);
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                    failed.store(true);
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace plugsense

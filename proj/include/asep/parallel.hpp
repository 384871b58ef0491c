#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace asep {

// ASEP_THREADS, default 1.
inline int thread_count() {
    if (const char* s = std::getenv("ASEP_THREADS")) {
        const int n = std::atoi(s);
        if (n > 0) return n;
    }
    return 1;
}

// f(begin, end) over contiguous chunks of [0, n).
template <class F>
void parallel_for(std::size_t n, F&& f) {
    const std::size_t nt = std::min<std::size_t>(std::size_t(thread_count()), std::max<std::size_t>(1, n / 4096));
    if (nt <= 1) {
        f(std::size_t(0), n);
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nt; ++t)
        pool.emplace_back([&, t] { f(n * t / nt, n * (t + 1) / nt); });
    for (auto& th : pool) th.join();
}

}  // namespace asep

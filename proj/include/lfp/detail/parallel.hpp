#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace lfp::detail {

/// Worker count: hardware concurrency, capped by LFP_LAB_THREADS when set.
inline unsigned thread_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("LFP_LAB_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
        } catch (...) {
        }
    }
    return n;
}

/// Runs body(chunk) for chunk in [0, chunks). Each chunk writes only its own
/// slot, so callers that reduce the slots in index order get results that do
/// not depend on the number of threads.
template <class Body>
void parallel_chunks(std::size_t chunks, Body&& body) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), chunks));
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) body(c);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t c = t; c < chunks; c += workers) body(c);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace lfp::detail

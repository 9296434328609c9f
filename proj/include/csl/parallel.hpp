#pragma once

// Static-chunk parallel loops. Results never depend on the worker count:
// every index writes its own slot and reductions combine fixed-size blocks
// in index order.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace csl {

template <class Body>
void parallel_for(std::size_t count, int jobs, Body&& body) {
    const std::size_t workers =
        std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t lo = count * w / workers, hi = count * (w + 1) / workers;
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline constexpr std::size_t kReductionBlock = 4096;

/// Sum of block(lo, hi) over consecutive blocks of kReductionBlock indices,
/// combined in block order.
template <class T, class Block>
T parallel_block_sum(std::size_t count, int jobs, Block&& block) {
    const std::size_t nblocks = (count + kReductionBlock - 1) / kReductionBlock;
    std::vector<T> partial(nblocks, T{});
    parallel_for(nblocks, jobs, [&](std::size_t b) {
        partial[b] = block(b * kReductionBlock, std::min(count, (b + 1) * kReductionBlock));
    });
    T total{};
    for (const auto& p : partial) total += p;
    return total;
}

} // namespace csl

// Minimal deterministic data-parallel helper.

#pragma once

#include <cstddef>
#include <functional>

namespace windmix {

// Worker count: WINDMIX_THREADS when set (minimum 1), otherwise
// hardware concurrency.
unsigned thread_budget();

// Runs fn(i) for every i in [0, n). Each index is visited exactly once, so
// writing to slot i of a preallocated buffer is race-free. Aggregations must
// be done by the caller over the filled buffer, in index order, to keep
// results independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace windmix

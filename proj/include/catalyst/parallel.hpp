#pragma once

#include <cstddef>
#include <functional>

namespace catalyst {

// Worker count: CATALYST_THREADS when set to a positive integer, otherwise
// std::thread::hardware_concurrency() (at least 1).
std::size_t thread_count();

// Runs body(i) for i in [0, n) over contiguous chunks, one chunk per worker.
// Each index is visited exactly once, so writes to out[i] give output that
// does not depend on the worker count. The first exception thrown by any
// worker is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace catalyst

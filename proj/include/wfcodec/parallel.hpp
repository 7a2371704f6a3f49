#pragma once

#include <cstddef>
#include <functional>

namespace wfc {

// Worker threads used by data-parallel kernels: hardware concurrency, capped
// by the WFCODEC_THREADS environment variable when it is set to a positive
// integer.
std::size_t worker_count();

// Runs body(i) for i in [0, n). Each index is handled by exactly one thread,
// so results never depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace wfc

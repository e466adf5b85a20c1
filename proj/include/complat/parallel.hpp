#pragma once

#include <cstddef>
#include <functional>

namespace complat {

// Evaluation fan-out width: hardware concurrency capped by COMPLAT_THREADS.
std::size_t eval_threads();

// Runs fn(begin, end) over disjoint chunks of [0, n). Callers write results
// into preallocated per-index slots and reduce sequentially afterwards, so
// output never depends on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace complat

#pragma once

#include <cstddef>
#include <functional>

namespace guidec {

// Worker count: GUIDEC_THREADS if set and positive, else hardware concurrency.
std::size_t thread_budget();

// Runs body(i) for i in [0, n) on up to thread_budget() threads. Callers write
// results into index-addressed slots so output never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace guidec

#pragma once

#include <cstddef>
#include <functional>

namespace crowdflow {

// Worker cap from CROWDFLOW_THREADS; unset or 0 means hardware concurrency.
int worker_count();

// Runs body(i) for i in [0, n). Each index is visited exactly once, so
// callers that write only to slot i get schedule-independent results.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace crowdflow

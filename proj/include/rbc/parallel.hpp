#pragma once

#include <cstddef>
#include <functional>

namespace rbc {

/// Worker cap: RBC_THREADS when set to a positive integer, otherwise the
/// available hardware parallelism (at least 1).
std::size_t worker_count();

/// Run body(0..n-1) on up to worker_count() threads. Each index runs exactly
/// once; callers write results by index so output order never depends on
/// scheduling. The exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rbc

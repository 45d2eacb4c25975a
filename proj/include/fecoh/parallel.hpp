#pragma once

#include <cstddef>
#include <functional>

namespace fecoh {

/// Worker count: FECOH_WORKERS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Calls body(i) for i in [0, n) on up to worker_count() threads. Indices are
/// handed out in contiguous chunks; results must be written to disjoint
/// slots. The first exception thrown by any worker is rethrown after all
/// workers have stopped.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fecoh

#pragma once

#include <cstddef>
#include <functional>

namespace bspw {

/// Worker count: BSPW_WORKERS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on worker_count() threads. Tasks are
/// handed out dynamically; callers write results into per-index slots so the
/// outcome does not depend on scheduling. The first exception thrown by any
/// task is rethrown after all workers stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace bspw

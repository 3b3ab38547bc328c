#pragma once

#include <functional>

namespace stocon {

/// Number of workers actually used for a request (0 = available parallelism).
int resolve_threads(int requested);

/// Runs body(i) for i in [0, count) on a small worker pool. Each index must
/// be independent; callers own any per-index result slots, so output never
/// depends on scheduling. The first exception thrown by a worker is rethrown.
void parallel_for_index(long count, int threads, const std::function<void(long)>& body);

}  // namespace stocon

#pragma once

#include <cstddef>
#include <functional>

namespace objconf {

/// Worker count: CONFORMAL_OBJECTS_THREADS if set and positive, otherwise
/// the hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Each index is executed exactly once; the
/// work split is static, so results written to per-index slots are identical
/// for any worker count. The exception thrown by the lowest failing index is
/// rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace objconf

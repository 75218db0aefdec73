#pragma once

#include <cstddef>
#include <functional>

namespace tacseg {

/// Worker count: TACSEG_THREADS when set, else hardware concurrency (>= 1).
int worker_count();

/// Calls fn(i) for i in [0, n) across worker_count() threads. Each index runs
/// exactly once; results must be written to per-index slots so the outcome
/// does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace tacseg

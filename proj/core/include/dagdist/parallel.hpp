#pragma once

#include <cstddef>
#include <functional>

namespace dagdist {

// Runs body(0), ..., body(n-1) on a small thread pool. Callers must write
// results into per-index slots; reductions over those slots happen on the
// calling thread in index order, so the outcome is independent of the worker
// count. The first exception thrown by any body is rethrown after the join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace dagdist

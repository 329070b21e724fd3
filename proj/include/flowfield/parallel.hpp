#pragma once

#include <cstddef>
#include <functional>

namespace flowfield {

/// Runs body(i) for i in [0, count) on up to `workers` threads. Items are
/// handed out dynamically; callers must write only item-local state.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t)>& body);

/// Worker count from an explicit request, FLOWFIELD_THREADS, or the
/// hardware, in that order.
int resolve_workers(int requested);

}  // namespace flowfield

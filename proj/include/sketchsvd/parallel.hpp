#pragma once

#include <cstddef>
#include <functional>

namespace sketchsvd {

/// Worker count: SKETCHSVD_THREADS if set and positive, otherwise the
/// machine's hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on a bounded set of workers and waits.
///
/// Calls nested inside a worker run serially on that worker. If any body
/// throws, the exception from the lowest failing index is rethrown after
/// all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace sketchsvd

#pragma once

#include <cstddef>
#include <functional>

namespace graspcause {

/// Thread budget: GRASPCAUSE_THREADS when set, else hardware concurrency.
/// Results never depend on the value; it only bounds wall time.
unsigned thread_budget();

/// Runs fn(i) for i in [0, n). Work items must write only to their own
/// output slots; chunks are assigned deterministically by index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace graspcause

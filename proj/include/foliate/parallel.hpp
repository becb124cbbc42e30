#pragma once

#include <cstddef>
#include <functional>

namespace foliate {

/// Worker count: FOLIATE_THREADS when set to a positive integer, else the hardware concurrency.
int thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. The first exception thrown by
/// any body is rethrown after all workers have joined.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace foliate

#pragma once

#include <cstddef>
#include <functional>

namespace setinf::parallel {

/// Process-wide worker count used by `for_each_index`. 0 selects
/// std::thread::hardware_concurrency(). Results never depend on it.
void set_workers(unsigned workers);
unsigned workers();

/// Calls body(i) for i in [0, n) on up to workers() threads, statically
/// chunked. If any call throws, the exception from the lowest index is
/// rethrown after all threads join.
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace setinf::parallel

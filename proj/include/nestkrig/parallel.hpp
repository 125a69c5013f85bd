#ifndef NESTKRIG_PARALLEL_HPP
#define NESTKRIG_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace nestkrig {

/// Worker cap from NESTED_KRIG_THREADS (unset or 0 means hardware concurrency).
std::size_t worker_count();

/*
 * Calls body(i) for i in [0, count). Work is split into contiguous chunks, so
 * bodies that only write to slot i give results independent of the thread
 * count. The first exception thrown by any body is rethrown on the caller.
 */
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t)> &body);

} // namespace nestkrig

#endif

#pragma once

#include <cstddef>
#include <functional>

namespace mkv {

/// Worker threads used by per-node loops. Defaults to the hardware
/// concurrency, capped by the MKV_THREADS environment variable.
std::size_t thread_count();
/// Overrides the thread count for the current process (0 restores the default).
void set_thread_count(std::size_t threads);

/// Calls body(begin, end) over disjoint chunks of [0, n). Each index is handled
/// by exactly one call, so results are independent of the thread count as long
/// as the body writes only to its own indices.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace mkv

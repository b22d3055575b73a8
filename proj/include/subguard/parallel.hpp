#pragma once

#include <cstddef>
#include <functional>

namespace subguard {

/// Worker count: hardware concurrency, capped by the SCOPE_THREADS environment variable when set.
unsigned thread_count();

/// Calls fn(i) for i in [0, n) over contiguous chunks. Each index is processed exactly once, so results written
/// per index do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace subguard

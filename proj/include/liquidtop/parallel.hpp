#pragma once

#include <cstddef>
#include <functional>

namespace liquidtop {

/// Process-wide worker count used by parallel_for. 0 = hardware concurrency.
void set_thread_count(int n);
int thread_count();

/// Resolve a requested count: n > 0 wins, else LIQUIDTOP_THREADS, else all cores.
int resolve_thread_count(int requested);

/// Static block partition of [0, n) over the configured workers.
/// Results must be written to preallocated, disjoint slots by the body.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace liquidtop

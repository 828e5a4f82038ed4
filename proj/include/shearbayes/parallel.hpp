#pragma once

#include <functional>

namespace shearbayes {

/// Number of worker threads to use: `requested` if positive, otherwise
/// hardware concurrency (capped by the SHEARBAYES_THREADS environment
/// variable when set).
int resolve_threads(int requested);

/// Runs fn(0..n-1) on up to `threads` workers. Tasks must be independent
/// and write disjoint outputs; results are then identical to a serial run.
/// Exceptions thrown by tasks are rethrown on the calling thread.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace shearbayes

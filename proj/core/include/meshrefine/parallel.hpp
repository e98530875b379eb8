#pragma once

#include <functional>

namespace meshrefine {

// Number of workers used when a caller passes 0: the MESHREFINE_THREADS
// environment variable if set, else the hardware concurrency.
int default_thread_count();

// Runs fn(0..n-1) on up to thread_count workers (static round-robin
// partition). fn must write only to per-index slots; outputs are then
// independent of the worker count.
void parallel_for(int n, int thread_count, const std::function<void(int)>& fn);

}  // namespace meshrefine

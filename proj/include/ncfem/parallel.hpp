#pragma once

#include <functional>

namespace ncfem {

// Worker count: set_worker_count() if called with n > 0, else NCFEM_THREADS, else the
// hardware concurrency.
int worker_count();
void set_worker_count(int n);

// Calls body(begin, end, worker) on contiguous chunks of [0, n). Chunk boundaries depend
// only on n and the worker count, so per-worker buffers merged in worker order give
// reproducible results.
void parallel_for(int n, const std::function<void(int, int, int)>& body);

} // namespace ncfem

#pragma once

#include <cstddef>
#include <functional>

namespace scbf {

/// Worker cap for ensemble loops. Defaults to SCBF_DEFAULT_THREADS when set,
/// else the hardware concurrency.
int thread_cap();
void set_thread_cap(int threads);

/// Calls fn(i) for i in [0, n) on up to thread_cap() threads. Returns after
/// every call finished; rethrows the exception of the lowest failing index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace scbf

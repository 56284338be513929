#pragma once

#include <omp.h>

#include <exception>
#include <mutex>

namespace wgain {

inline int worker_count() { return omp_get_max_threads(); }
inline int worker_index() { return omp_get_thread_num(); }

/// Runs fn(i) for i in [0, n) on the OpenMP team with a static schedule, so a
/// given thread count always maps the same indices to the same worker. The
/// first exception thrown by any iteration is rethrown on the caller.
template <class Fn>
void parallel_for(std::ptrdiff_t n, Fn&& fn) {
  std::exception_ptr error;
  std::mutex mu;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard lock(mu);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace wgain

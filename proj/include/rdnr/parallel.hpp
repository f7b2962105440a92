#pragma once

#include <cstddef>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rdnr {

// Serial is the reference path; Parallel uses OpenMP when compiled in.
// Both must produce identical results: kernels write into index-addressed
// slots and any reduction happens serially afterwards.
enum class ExecPolicy { Serial, Parallel };

// Worker cap: RDNR_THREADS env var if set (>=1), else the OpenMP default.
inline int worker_thread_cap() {
  if (const char* s = std::getenv("RDNR_THREADS")) {
    int v = std::atoi(s);
    if (v >= 1) return v;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

template <class F>
void parallel_for(std::size_t n, ExecPolicy pol, F&& fn) {
  (void)pol;
#ifdef _OPENMP
  if (pol == ExecPolicy::Parallel && n > 1) {
    const int cap = worker_thread_cap();
#pragma omp parallel for schedule(dynamic) num_threads(cap)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      fn(static_cast<std::size_t>(i));
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace rdnr

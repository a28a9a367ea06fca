#ifndef VESSIOT_PARALLEL_HPP
#define VESSIOT_PARALLEL_HPP

#include <cstddef>

namespace vessiot {

// Runtime switch for the OpenMP kernels. 0 = use OMP default; 1 = serial.
void set_max_threads(int n);
int max_threads();
bool parallel_enabled();

// Applies f(i) for i in [0, n). Each index must write only its own slot of
// any shared output so results do not depend on scheduling.
template <typename F>
void parallel_for_index(size_t n, F&& f);

}  // namespace vessiot

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vessiot {

template <typename F>
void parallel_for_index(size_t n, F&& f) {
#ifdef _OPENMP
  if (parallel_enabled() && n > 1) {
    int threads = max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads > 0 ? threads : omp_get_max_threads())
    for (long long i = 0; i < static_cast<long long>(n); ++i) f(static_cast<size_t>(i));
    return;
  }
#endif
  for (size_t i = 0; i < n; ++i) f(i);
}

}  // namespace vessiot

#endif

#include "vessiot/parallel.hpp"

#include <atomic>
#include <cstdlib>

namespace vessiot {

namespace {
std::atomic<int> g_max_threads{-1};

int env_default() {
  if (const char* v = std::getenv("VESSIOT_THREADS")) {
    int n = std::atoi(v);
    if (n >= 0) return n;
  }
  return 0;
}
}  // namespace

void set_max_threads(int n) { g_max_threads.store(n); }

int max_threads() {
  int n = g_max_threads.load();
  if (n < 0) {
    n = env_default();
    g_max_threads.store(n);
  }
  return n;
}

bool parallel_enabled() {
#ifdef _OPENMP
  return max_threads() != 1;
#else
  return false;
#endif
}

}  // namespace vessiot

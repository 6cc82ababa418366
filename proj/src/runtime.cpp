#include "tloc/runtime.hpp"

namespace tloc::runtime {

namespace {
int g_threads = 1;
}

int threads() { return g_threads; }

void set_threads(int n) {
  if (n <= 0) n = omp_get_max_threads();
  g_threads = n < 1 ? 1 : n;
  omp_set_num_threads(g_threads);
}

}  // namespace tloc::runtime

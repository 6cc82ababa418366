#pragma once

#include <omp.h>

namespace tloc::runtime {

// Global worker-thread budget.  1 means fully serial execution (the timing
// benchmark pins this), 0 means "auto" = all hardware threads.  Parallel
// kernels and the per-sample fan-outs consult this instead of raw OpenMP
// state so a single switch controls the whole library.
int threads();
void set_threads(int n);  // n <= 0 selects auto

inline bool parallel_enabled() { return threads() > 1; }

}  // namespace tloc::runtime

#pragma once

#include <cmath>
#include <cstdint>

#include "tloc/runtime.hpp"

// Dense inner loops behind every graph operation.  kern::ref holds the serial
// reference implementations; kern::par holds the OpenMP versions.  The
// unqualified entry points dispatch on problem size and the runtime thread
// budget.  Both sides partition work so each output element is produced by one
// thread with the same serial accumulation order, so ref and par results are
// bit-identical regardless of thread count.

namespace tloc::kern {

using i64 = std::int64_t;

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr i64 kMinParallelWork = 1 << 16;

namespace ref {

// C (+)= A[m x k] * B[k x n], all row-major.
template <typename T>
void mm_nn(T* c, const T* a, const T* b, i64 m, i64 k, i64 n, bool acc) {
  for (i64 i = 0; i < m; ++i) {
    T* ci = c + i * n;
    if (!acc)
      for (i64 j = 0; j < n; ++j) ci[j] = T(0);
    const T* ai = a + i * k;
    for (i64 l = 0; l < k; ++l) {
      const T av = ai[l];
      const T* bl = b + l * n;
      for (i64 j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

// C (+)= A[m x n] * B[k x n]^T  ->  C[m x k].  Rows of A and B are contiguous,
// so the inner loop is a dot product.
template <typename T>
void mm_nt(T* c, const T* a, const T* b, i64 m, i64 n, i64 k, bool acc) {
  for (i64 i = 0; i < m; ++i) {
    const T* ai = a + i * n;
    for (i64 l = 0; l < k; ++l) {
      const T* bl = b + l * n;
      T s = T(0);
      for (i64 j = 0; j < n; ++j) s += ai[j] * bl[j];
      c[i * k + l] = acc ? c[i * k + l] + s : s;
    }
  }
}

// C (+)= A[m x k]^T * B[m x n]  ->  C[k x n].
template <typename T>
void mm_tn(T* c, const T* a, const T* b, i64 m, i64 k, i64 n, bool acc) {
  if (!acc)
    for (i64 i = 0; i < k * n; ++i) c[i] = T(0);
  for (i64 i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    const T* bi = b + i * n;
    for (i64 l = 0; l < k; ++l) {
      const T av = ai[l];
      T* cl = c + l * n;
      for (i64 j = 0; j < n; ++j) cl[j] += av * bi[j];
    }
  }
}

// y (+)= A[m x k] * x[k]
template <typename T>
void matvec(T* y, const T* a, const T* x, i64 m, i64 k, bool acc) {
  for (i64 i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    T s = T(0);
    for (i64 l = 0; l < k; ++l) s += ai[l] * x[l];
    y[i] = acc ? y[i] + s : s;
  }
}

// y (+)= x[m]^T * A[m x n]
template <typename T>
void vecmat(T* y, const T* x, const T* a, i64 m, i64 n, bool acc) {
  if (!acc)
    for (i64 j = 0; j < n; ++j) y[j] = T(0);
  for (i64 i = 0; i < m; ++i) {
    const T xv = x[i];
    const T* ai = a + i * n;
    for (i64 j = 0; j < n; ++j) y[j] += xv * ai[j];
  }
}

// A += u[m] (outer) v[k]
template <typename T>
void outer_acc(T* a, const T* u, const T* v, i64 m, i64 k) {
  for (i64 i = 0; i < m; ++i) {
    const T uv = u[i];
    T* ai = a + i * k;
    for (i64 l = 0; l < k; ++l) ai[l] += uv * v[l];
  }
}

}  // namespace ref

namespace par {

template <typename T>
void mm_nn(T* c, const T* a, const T* b, i64 m, i64 k, i64 n, bool acc) {
#pragma omp parallel for schedule(static)
  for (i64 i = 0; i < m; ++i) ref::mm_nn(c + i * n, a + i * k, b, 1, k, n, acc);
}

template <typename T>
void mm_nt(T* c, const T* a, const T* b, i64 m, i64 n, i64 k, bool acc) {
#pragma omp parallel for schedule(static)
  for (i64 i = 0; i < m; ++i) ref::mm_nt(c + i * k, a + i * n, b, 1, n, k, acc);
}

template <typename T>
void mm_tn(T* c, const T* a, const T* b, i64 m, i64 k, i64 n, bool acc) {
  // Each thread owns a block of output rows l; the reduction over i keeps the
  // serial order inside each element.
#pragma omp parallel for schedule(static)
  for (i64 l = 0; l < k; ++l) {
    T* cl = c + l * n;
    if (!acc)
      for (i64 j = 0; j < n; ++j) cl[j] = T(0);
    for (i64 i = 0; i < m; ++i) {
      const T av = a[i * k + l];
      const T* bi = b + i * n;
      for (i64 j = 0; j < n; ++j) cl[j] += av * bi[j];
    }
  }
}

template <typename T>
void matvec(T* y, const T* a, const T* x, i64 m, i64 k, bool acc) {
#pragma omp parallel for schedule(static)
  for (i64 i = 0; i < m; ++i) ref::matvec(y + i, a + i * k, x, 1, k, acc);
}

}  // namespace par

inline bool use_parallel(i64 work) {
  return work >= kMinParallelWork && runtime::parallel_enabled();
}

template <typename T>
void mm_nn(T* c, const T* a, const T* b, i64 m, i64 k, i64 n, bool acc = false) {
  if (use_parallel(m * k * n))
    par::mm_nn(c, a, b, m, k, n, acc);
  else
    ref::mm_nn(c, a, b, m, k, n, acc);
}

template <typename T>
void mm_nt(T* c, const T* a, const T* b, i64 m, i64 n, i64 k, bool acc = false) {
  if (use_parallel(m * n * k))
    par::mm_nt(c, a, b, m, n, k, acc);
  else
    ref::mm_nt(c, a, b, m, n, k, acc);
}

template <typename T>
void mm_tn(T* c, const T* a, const T* b, i64 m, i64 k, i64 n, bool acc = false) {
  if (use_parallel(m * k * n))
    par::mm_tn(c, a, b, m, k, n, acc);
  else
    ref::mm_tn(c, a, b, m, k, n, acc);
}

template <typename T>
void matvec(T* y, const T* a, const T* x, i64 m, i64 k, bool acc = false) {
  if (use_parallel(m * k))
    par::matvec(y, a, x, m, k, acc);
  else
    ref::matvec(y, a, x, m, k, acc);
}

template <typename T>
void vecmat(T* y, const T* x, const T* a, i64 m, i64 n, bool acc = false) {
  ref::vecmat(y, x, a, m, n, acc);  // always tiny in this model
}

template <typename T>
void outer_acc(T* a, const T* u, const T* v, i64 m, i64 k) {
  ref::outer_acc(a, u, v, m, k);
}

}  // namespace tloc::kern

#pragma once
#include <algorithm>
#include <cstddef>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dwq {

// Execution policy for the pointwise numeric kernels. Every kernel has a
// serial path (the reference) and an OpenMP path; both must produce
// identical results, which the test suite asserts.
enum class Exec { serial, openmp };

template <class Fn>
void parallel_for(Exec exec, std::size_t n, Fn&& body) {
#ifdef _OPENMP
  if (exec == Exec::openmp) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
      body(static_cast<std::size_t>(i));
    return;
  }
#endif
  (void)exec;
  for (std::size_t i = 0; i < n; ++i) body(i);
}

// max_i f(i); 0 for an empty range.
template <class Fn>
double parallel_max(Exec exec, std::size_t n, Fn&& f) {
  double m = 0.0;
#ifdef _OPENMP
  if (exec == Exec::openmp) {
#pragma omp parallel for schedule(static) reduction(max : m)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
      m = std::max(m, f(static_cast<std::size_t>(i)));
    return m;
  }
#endif
  (void)exec;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, f(i));
  return m;
}

} // namespace dwq

// Deterministic parallel reduction helpers.
//
// Work is split into fixed-size chunks (independent of thread count), chunk
// partials are computed in parallel, and the partials are combined by a
// pairwise tree in index order. The floating-point result is therefore
// bit-identical for any number of OpenMP threads, and identical to the
// serial path that walks the same plan.
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ik {

constexpr std::int64_t kDefaultChunk = 256;

// acc(lo, hi) computes the partial for items [lo, hi).
// combine(a, b) folds b into a. Tree shape depends only on (total, chunk).
template <class Acc, class ChunkFn, class CombineFn>
Acc deterministic_reduce(std::int64_t total, std::int64_t chunk, ChunkFn&& acc, CombineFn&& combine,
                         Acc zero, bool parallel = true) {
  if (total <= 0) return zero;
  const std::int64_t n_chunks = (total + chunk - 1) / chunk;
  std::vector<Acc> partials(static_cast<std::size_t>(n_chunks), zero);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel && n_chunks > 1)
#endif
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    const std::int64_t lo = c * chunk;
    const std::int64_t hi = std::min(total, lo + chunk);
    partials[static_cast<std::size_t>(c)] = acc(lo, hi);
  }

  // Pairwise tree: combine stride-2 neighbors until one remains.
  for (std::int64_t stride = 1; stride < n_chunks; stride *= 2) {
    for (std::int64_t i = 0; i + stride < n_chunks; i += 2 * stride) {
      combine(partials[static_cast<std::size_t>(i)], partials[static_cast<std::size_t>(i + stride)]);
    }
  }
  return partials[0];
}

// Runs body(i) for i in [0, total) in parallel; results must be written to
// per-index slots by the caller so ordering does not matter.
template <class Fn>
void parallel_for_index(std::int64_t total, Fn&& body, bool parallel = true) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel && total > 1)
#endif
  for (std::int64_t i = 0; i < total; ++i) body(i);
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int k) {
#ifdef _OPENMP
  if (k > 0) omp_set_num_threads(k);
#else
  (void)k;
#endif
}

}  // namespace ik

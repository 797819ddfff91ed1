#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace wildfit {

// Execution mode for the batch-level kernels. Every kernel writes
// per-index results into preallocated slots and reductions run in a
// fixed index order, so serial and openmp produce bit-identical output.
// The serial path is the reference the tests compare against.
enum class ExecMode { serial, openmp };

namespace par {

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

template <typename Fn>
void for_index(ExecMode mode, int64_t n, Fn&& fn) {
#ifdef _OPENMP
    if (mode == ExecMode::openmp) {
#pragma omp parallel for schedule(dynamic, 1)
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
#else
    (void)mode;
#endif
    for (int64_t i = 0; i < n; ++i) fn(i);
}

} // namespace par
} // namespace wildfit

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "eden/core/kernels.hpp"

namespace eden::kernels {

// Below this many multiply-adds the fork/join cost dominates.
constexpr std::size_t kParallelThreshold = 1u << 16;

#define EDEN_PRAGMA(x) _Pragma(#x)
#define EDEN_PARALLEL_FOR(work) EDEN_PRAGMA(omp parallel for schedule(static) if ((work) >= kParallelThreshold))
#include "kernels_impl.inl"
#undef EDEN_PARALLEL_FOR

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace eden::kernels

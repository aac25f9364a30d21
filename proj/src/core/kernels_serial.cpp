#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "eden/core/kernels.hpp"

namespace eden::kernels::serial {

#define EDEN_PARALLEL_FOR(work)
#include "kernels_impl.inl"
#undef EDEN_PARALLEL_FOR

}  // namespace eden::kernels::serial

// Internal: per-ISA kernel tables.
#pragma once

#include "forge/simd.hpp"

namespace forge::simd::detail {

#if defined(FORGE_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif
#if defined(FORGE_HAVE_NEON)
const KernelTable& neon_kernels();
#endif

}  // namespace forge::simd::detail

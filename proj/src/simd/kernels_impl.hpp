#pragma once

#include "klon/simd/kernels.hpp"

namespace klon::simd::detail {

extern const KernelTable kScalarTable;
#if defined(KLON_HAVE_AVX2_TU)
extern const KernelTable kAvx2Table;
#endif
#if defined(KLON_HAVE_NEON_TU)
extern const KernelTable kNeonTable;
#endif

}  // namespace klon::simd::detail

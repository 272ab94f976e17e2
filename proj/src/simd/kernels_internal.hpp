#pragma once

#include "vsphere/simd/kernels.hpp"

namespace vsphere::simd::detail {

extern const KernelTable kScalarTable;
#if VSPHERE_HAVE_AVX2
extern const KernelTable kAvx2Table;
#endif

}  // namespace vsphere::simd::detail

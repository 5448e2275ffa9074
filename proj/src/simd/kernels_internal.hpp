#pragma once

#include "acf/simd/kernels.hpp"

namespace acf::simd::detail {

template <class T>
const Kernels<T>& scalar_table();

#if ACF_HAVE_AVX2
template <class T>
const Kernels<T>& avx2_table();
#endif

}  // namespace acf::simd::detail

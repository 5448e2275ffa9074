#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <vector>

#include "kernels_internal.hpp"

namespace acf::simd {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if ACF_HAVE_AVX2
      __builtin_cpu_init();
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

namespace {

Isa select_isa() {
  if (const char* forced = std::getenv("ACF_SIMD"); forced && std::strcmp(forced, "scalar") == 0)
    return Isa::scalar;
  return isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

}  // namespace

Isa active_isa() {
  static const Isa isa = select_isa();
  return isa;
}

template <class T>
const Kernels<T>& kernels_for(Isa isa) {
#if ACF_HAVE_AVX2
  if (isa == Isa::avx2 && isa_available(Isa::avx2)) return detail::avx2_table<T>();
#endif
  (void)isa;
  return detail::scalar_table<T>();
}

template <class T>
const Kernels<T>& kernels() {
  static const Kernels<T>& table = kernels_for<T>(active_isa());
  return table;
}

namespace {

template <class T>
void transpose_into(std::size_t rows, std::size_t cols, const T* src, std::size_t ld,
                    std::vector<T>& dst) {
  // src is rows×cols (leading dimension ld); dst becomes cols×rows.
  dst.resize(rows * cols);
  constexpr std::size_t tile = 32;
  for (std::size_t r0 = 0; r0 < rows; r0 += tile)
    for (std::size_t c0 = 0; c0 < cols; c0 += tile)
      for (std::size_t r = r0; r < std::min(rows, r0 + tile); ++r)
        for (std::size_t c = c0; c < std::min(cols, c0 + tile); ++c) dst[c * rows + r] = src[r * ld + c];
}

}  // namespace

template <class T>
void gemm(const Kernels<T>& kern, Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          const T* a, std::size_t lda, const T* b, std::size_t ldb, T* c, std::size_t ldc,
          bool accumulate) {
  thread_local std::vector<T> a_pack, b_pack;
  if (ta == Trans::no && tb == Trans::yes) {
    kern.gemm_nt(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
    return;
  }
  if (ta == Trans::yes) {
    // stored A is k×m
    transpose_into(k, m, a, lda, a_pack);
    a = a_pack.data();
    lda = k;
  }
  if (tb == Trans::yes) {
    // stored B is n×k
    transpose_into(n, k, b, ldb, b_pack);
    b = b_pack.data();
    ldb = n;
  }
  kern.gemm_nn(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

template const Kernels<float>& kernels<float>();
template const Kernels<double>& kernels<double>();
template const Kernels<float>& kernels_for<float>(Isa);
template const Kernels<double>& kernels_for<double>(Isa);
template void gemm<float>(const Kernels<float>&, Trans, Trans, std::size_t, std::size_t,
                          std::size_t, const float*, std::size_t, const float*, std::size_t,
                          float*, std::size_t, bool);
template void gemm<double>(const Kernels<double>&, Trans, Trans, std::size_t, std::size_t,
                           std::size_t, const double*, std::size_t, const double*, std::size_t,
                           double*, std::size_t, bool);

}  // namespace acf::simd

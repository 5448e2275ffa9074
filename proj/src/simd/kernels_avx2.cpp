// Compiled with -mavx2 -mfma. Nothing in this file may run before
// isa_available(Isa::avx2) has been checked by the dispatcher.

#include <immintrin.h>

#include <algorithm>
#include <vector>

#include "kernels_internal.hpp"

namespace acf::simd::detail {
namespace {

struct F32x8 {
  using value_type = float;
  using reg = __m256;
  static constexpr std::size_t width = 8;
  static reg zero() { return _mm256_setzero_ps(); }
  static reg set1(float v) { return _mm256_set1_ps(v); }
  static reg load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, reg v) { _mm256_storeu_ps(p, v); }
  static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_ps(a, b, c); }
  static reg add(reg a, reg b) { return _mm256_add_ps(a, b); }
  static reg mul(reg a, reg b) { return _mm256_mul_ps(a, b); }
  static float hsum(reg v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
  }
};

struct F64x4 {
  using value_type = double;
  using reg = __m256d;
  static constexpr std::size_t width = 4;
  static reg zero() { return _mm256_setzero_pd(); }
  static reg set1(double v) { return _mm256_set1_pd(v); }
  static reg load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, reg v) { _mm256_storeu_pd(p, v); }
  static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_pd(a, b, c); }
  static reg add(reg a, reg b) { return _mm256_add_pd(a, b); }
  static reg mul(reg a, reg b) { return _mm256_mul_pd(a, b); }
  static double hsum(reg v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d high64 = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
  }
};

// NN product. Each K slab of B is packed into zero-padded column panels
// two vectors wide; a 6×(2 vectors) register block then walks one panel
// with one broadcast A element per row.
constexpr std::size_t kRows = 6;
constexpr std::size_t kSlab = 256;

template <class V>
void pack_b(std::size_t kb, std::size_t n, const typename V::value_type* b, std::size_t ldb,
            typename V::value_type* dst) {
  using T = typename V::value_type;
  constexpr std::size_t w2 = 2 * V::width;
  for (std::size_t j0 = 0; j0 < n; j0 += w2) {
    const std::size_t cols = std::min(w2, n - j0);
    T* panel = dst + (j0 / w2) * kb * w2;
    for (std::size_t p = 0; p < kb; ++p) {
      const T* src = b + p * ldb + j0;
      T* d = panel + p * w2;
      std::copy(src, src + cols, d);
      std::fill(d + cols, d + w2, T(0));
    }
  }
}

template <class V, std::size_t R>
void micro_nn(std::size_t kb, const typename V::value_type* a, std::size_t lda,
              const typename V::value_type* panel, typename V::value_type* c, std::size_t ldc,
              std::size_t cols, bool accumulate) {
  using T = typename V::value_type;
  using reg = typename V::reg;
  constexpr std::size_t w = V::width;
  const bool full = cols == 2 * w;
  reg acc0[R], acc1[R];
  for (std::size_t r = 0; r < R; ++r) {
    acc0[r] = full && accumulate ? V::load(c + r * ldc) : V::zero();
    acc1[r] = full && accumulate ? V::load(c + r * ldc + w) : V::zero();
  }
  for (std::size_t p = 0; p < kb; ++p) {
    const reg b0 = V::load(panel + p * 2 * w);
    const reg b1 = V::load(panel + p * 2 * w + w);
    for (std::size_t r = 0; r < R; ++r) {
      const reg av = V::set1(a[r * lda + p]);
      acc0[r] = V::fmadd(av, b0, acc0[r]);
      acc1[r] = V::fmadd(av, b1, acc1[r]);
    }
  }
  if (full) {
    for (std::size_t r = 0; r < R; ++r) {
      V::store(c + r * ldc, acc0[r]);
      V::store(c + r * ldc + w, acc1[r]);
    }
    return;
  }
  alignas(64) T tmp[2 * w];
  for (std::size_t r = 0; r < R; ++r) {
    V::store(tmp, acc0[r]);
    V::store(tmp + w, acc1[r]);
    T* row = c + r * ldc;
    for (std::size_t j = 0; j < cols; ++j) row[j] = accumulate ? row[j] + tmp[j] : tmp[j];
  }
}

template <class V>
void micro_nn_rows(std::size_t rows, std::size_t kb, const typename V::value_type* a,
                   std::size_t lda, const typename V::value_type* panel,
                   typename V::value_type* c, std::size_t ldc, std::size_t cols, bool acc) {
  switch (rows) {
    case 6: return micro_nn<V, 6>(kb, a, lda, panel, c, ldc, cols, acc);
    case 5: return micro_nn<V, 5>(kb, a, lda, panel, c, ldc, cols, acc);
    case 4: return micro_nn<V, 4>(kb, a, lda, panel, c, ldc, cols, acc);
    case 3: return micro_nn<V, 3>(kb, a, lda, panel, c, ldc, cols, acc);
    case 2: return micro_nn<V, 2>(kb, a, lda, panel, c, ldc, cols, acc);
    default: return micro_nn<V, 1>(kb, a, lda, panel, c, ldc, cols, acc);
  }
}

// Packs rows p of the logical B = stored Bᵀ (stored n×k) the same way.
template <class V>
void pack_bt(std::size_t kb, std::size_t n, const typename V::value_type* b, std::size_t ldb,
             typename V::value_type* dst) {
  using T = typename V::value_type;
  constexpr std::size_t w2 = 2 * V::width;
  for (std::size_t j0 = 0; j0 < n; j0 += w2) {
    const std::size_t cols = std::min(w2, n - j0);
    T* panel = dst + (j0 / w2) * kb * w2;
    if (cols < w2) std::fill(panel, panel + kb * w2, T(0));
    for (std::size_t jj = 0; jj < cols; ++jj) {
      const T* src = b + (j0 + jj) * ldb;
      for (std::size_t p = 0; p < kb; ++p) panel[p * w2 + jj] = src[p];
    }
  }
}

template <class V, bool TransB>
void gemm_packed(std::size_t m, std::size_t n, std::size_t k, const typename V::value_type* a,
                 std::size_t lda, const typename V::value_type* b, std::size_t ldb,
                 typename V::value_type* c, std::size_t ldc, bool accumulate) {
  using T = typename V::value_type;
  constexpr std::size_t w2 = 2 * V::width;
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate)
      for (std::size_t i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, T(0));
    return;
  }
  thread_local std::vector<T> packed;
  const std::size_t panels = (n + w2 - 1) / w2;
  for (std::size_t p0 = 0; p0 < k; p0 += kSlab) {
    const std::size_t kb = std::min(kSlab, k - p0);
    const bool acc = accumulate || p0 > 0;
    packed.resize(panels * kb * w2);
    if constexpr (TransB)
      pack_bt<V>(kb, n, b + p0, ldb, packed.data());
    else
      pack_b<V>(kb, n, b + p0 * ldb, ldb, packed.data());
    for (std::size_t jp = 0; jp < panels; ++jp) {
      const std::size_t j0 = jp * w2;
      const std::size_t cols = std::min(w2, n - j0);
      const T* panel = packed.data() + jp * kb * w2;
      for (std::size_t i = 0; i < m; i += kRows)
        micro_nn_rows<V>(std::min(kRows, m - i), kb, a + i * lda + p0, lda, panel,
                         c + i * ldc + j0, ldc, cols, acc);
    }
  }
}

template <class V>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const typename V::value_type* a,
             std::size_t lda, const typename V::value_type* b, std::size_t ldb,
             typename V::value_type* c, std::size_t ldc, bool accumulate) {
  gemm_packed<V, false>(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

template <class V>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const typename V::value_type* a,
             std::size_t lda, const typename V::value_type* b, std::size_t ldb,
             typename V::value_type* c, std::size_t ldc, bool accumulate) {
  gemm_packed<V, true>(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

template <class V>
void axpy(std::size_t n, typename V::value_type alpha, const typename V::value_type* x,
          typename V::value_type* y) {
  const auto av = V::set1(alpha);
  std::size_t i = 0;
  for (; i + V::width <= n; i += V::width) V::store(y + i, V::fmadd(av, V::load(x + i), V::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <class V>
void add(std::size_t n, const typename V::value_type* x, const typename V::value_type* y,
         typename V::value_type* z) {
  std::size_t i = 0;
  for (; i + V::width <= n; i += V::width) V::store(z + i, V::add(V::load(x + i), V::load(y + i)));
  for (; i < n; ++i) z[i] = x[i] + y[i];
}

template <class V>
void mul(std::size_t n, const typename V::value_type* x, const typename V::value_type* y,
         typename V::value_type* z) {
  std::size_t i = 0;
  for (; i + V::width <= n; i += V::width) V::store(z + i, V::mul(V::load(x + i), V::load(y + i)));
  for (; i < n; ++i) z[i] = x[i] * y[i];
}

template <class V>
void scale(std::size_t n, typename V::value_type alpha, const typename V::value_type* x,
           typename V::value_type* y) {
  const auto av = V::set1(alpha);
  std::size_t i = 0;
  for (; i + V::width <= n; i += V::width) V::store(y + i, V::mul(av, V::load(x + i)));
  for (; i < n; ++i) y[i] = alpha * x[i];
}

template <class V>
typename V::value_type dot(std::size_t n, const typename V::value_type* x,
                           const typename V::value_type* y) {
  auto acc0 = V::zero();
  auto acc1 = V::zero();
  std::size_t i = 0;
  for (; i + 2 * V::width <= n; i += 2 * V::width) {
    acc0 = V::fmadd(V::load(x + i), V::load(y + i), acc0);
    acc1 = V::fmadd(V::load(x + i + V::width), V::load(y + i + V::width), acc1);
  }
  for (; i + V::width <= n; i += V::width) acc0 = V::fmadd(V::load(x + i), V::load(y + i), acc0);
  auto s = V::hsum(V::add(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

template <class V>
Kernels<typename V::value_type> make_table() {
  return {Isa::avx2, &gemm_nn<V>, &gemm_nt<V>, &axpy<V>, &add<V>, &mul<V>, &scale<V>, &dot<V>};
}

}  // namespace

template <>
const Kernels<float>& avx2_table<float>() {
  static const Kernels<float> table = make_table<F32x8>();
  return table;
}

template <>
const Kernels<double>& avx2_table<double>() {
  static const Kernels<double> table = make_table<F64x4>();
  return table;
}

}  // namespace acf::simd::detail

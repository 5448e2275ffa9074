#pragma once

// Runtime-dispatched inner loops. Every kernel has a portable scalar
// reference; x86-64 builds additionally carry AVX2+FMA variants compiled in a
// separate translation unit and selected once from cpuid. Setting the
// environment variable ACF_SIMD=scalar forces the reference path.

#include <cstddef>
#include <string_view>

namespace acf::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// True when the running CPU and the build both support `isa`.
bool isa_available(Isa isa);

/// The instruction set picked for this process.
Isa active_isa();

/// Function table for one element type and one instruction set.
///
/// gemm_nn computes C = A·B (or C += A·B when accumulate is set) for
/// row-major A (m×k, leading dimension lda), B (k×n, ldb), C (m×n, ldc).
/// gemm_nt takes B stored n×k and computes C = A·Bᵀ.
template <class T>
struct Kernels {
  Isa isa;
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda,
                  const T* b, std::size_t ldb, T* c, std::size_t ldc, bool accumulate);
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda,
                  const T* b, std::size_t ldb, T* c, std::size_t ldc, bool accumulate);
  void (*axpy)(std::size_t n, T alpha, const T* x, T* y);    // y += alpha·x
  void (*add)(std::size_t n, const T* x, const T* y, T* z);  // z = x + y
  void (*mul)(std::size_t n, const T* x, const T* y, T* z);  // z = x ⊙ y
  void (*scale)(std::size_t n, T alpha, const T* x, T* y);   // y = alpha·x
  T (*dot)(std::size_t n, const T* x, const T* y);
};

template <class T>
const Kernels<T>& kernels();

/// Table for a specific ISA; falls back to scalar if `isa` is unavailable.
template <class T>
const Kernels<T>& kernels_for(Isa isa);

enum class Trans { no, yes };

/// General matrix product with optional transposition of either operand.
/// Shapes refer to the logical (post-transpose) operands: op(A) is m×k,
/// op(B) is k×n. Leading dimensions refer to the stored matrices.
template <class T>
void gemm(const Kernels<T>& kern, Trans ta, Trans tb, std::size_t m, std::size_t n,
          std::size_t k, const T* a, std::size_t lda, const T* b, std::size_t ldb, T* c,
          std::size_t ldc, bool accumulate);

template <class T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T* c, std::size_t ldc, bool accumulate) {
  gemm(kernels<T>(), ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

}  // namespace acf::simd

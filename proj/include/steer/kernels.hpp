#pragma once

#include <cstddef>

// Dense double-precision kernels used by the autodiff tensor layer.
//
// Every kernel exists as a scalar reference implementation and, on x86-64,
// an AVX2+FMA variant. The active table is picked once at startup from
// CPUID; the STEER_KERNELS environment variable ("scalar" / "avx2")
// overrides the choice. Scalar and SIMD variants are equivalence-tested
// against each other in tests/test_kernels.cpp.

namespace steer::kern {

struct Ops {
  // elementwise, all arrays of length n, dst may alias a
  void (*add)(double* dst, const double* a, const double* b, std::size_t n);
  void (*sub)(double* dst, const double* a, const double* b, std::size_t n);
  void (*mul)(double* dst, const double* a, const double* b, std::size_t n);
  void (*div)(double* dst, const double* a, const double* b, std::size_t n);
  void (*scale)(double* dst, const double* a, double s, std::size_t n);
  void (*axpy)(double* y, double a, const double* x, std::size_t n);  // y += a*x
  void (*vexp)(double* dst, const double* a, std::size_t n);
  void (*vsigmoid)(double* dst, const double* a, std::size_t n);
  void (*velu)(double* dst, const double* a, std::size_t n);
  // dx = gy * elu'(x); elu'(x) = x > 0 ? 1 : exp(x)
  void (*velu_bwd)(double* dx, const double* x, const double* gy, std::size_t n);
  // ds = gy * s * (1 - s), s = sigmoid(x) already computed
  void (*vsigmoid_bwd)(double* dx, const double* s, const double* gy, std::size_t n);

  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*max)(const double* a, std::size_t n);  // n >= 1

  // Row-major GEMM: C = alpha * op(A) * op(B) + beta * C,
  // op(A) is M x K, op(B) is K x N, C is M x N.
  // lda/ldb are the leading dimensions of the stored (untransposed) arrays.
  void (*gemm)(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
               const double* a, int lda, const double* b, int ldb,
               double beta, double* c, int ldc);
};

const Ops& scalar_ops();
#if defined(__x86_64__) || defined(_M_X64)
const Ops& avx2_ops();
#endif
bool avx2_supported();

// Dispatched table (CPUID + STEER_KERNELS override, resolved once).
const Ops& ops();
const char* active_isa();  // "scalar" or "avx2"

}  // namespace steer::kern

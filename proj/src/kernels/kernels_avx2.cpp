#include "steer/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

namespace steer::kern {
namespace {

// ----- vectorized exp ------------------------------------------------------
// exp(x) = 2^n * exp(r), n = round(x/ln2), r = x - n*ln2 (split constant).
// Degree-13 Taylor on |r| <= ln2/2 keeps the relative error within a few ulp
// of std::exp. Inputs are clamped to the finite range of double exp.

inline __m256d exp4(__m256d x) {
  const __m256d hi = _mm256_set1_pd(708.0);
  const __m256d lo = _mm256_set1_pd(-708.0);
  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);

  __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  // Horner evaluation of sum r^k / k!, k = 0..13
  const double inv_fact[] = {
      1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0,
      1.0 / 3628800.0,    1.0 / 362880.0,    1.0 / 40320.0,
      1.0 / 5040.0,       1.0 / 720.0,       1.0 / 120.0,
      1.0 / 24.0,         1.0 / 6.0,         1.0 / 2.0};
  __m256d p = _mm256_set1_pd(inv_fact[0]);
  for (int i = 1; i < 12; ++i)
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(inv_fact[i]));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // scale by 2^n via the exponent field
  __m128i ni = _mm256_cvtpd_epi32(n);
  __m256i nl = _mm256_cvtepi32_epi64(ni);
  nl = _mm256_add_epi64(nl, _mm256_set1_epi64x(1023));
  nl = _mm256_slli_epi64(nl, 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(nl));
}

void a_add(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) dst[i] = a[i] + b[i];
}
void a_sub(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) dst[i] = a[i] - b[i];
}
void a_mul(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) dst[i] = a[i] * b[i];
}
void a_div(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_div_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) dst[i] = a[i] / b[i];
}
void a_scale(double* dst, const double* a, double s, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
  for (; i < n; ++i) dst[i] = a[i] * s;
}
void a_axpy(double* y, double a, const double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(
        y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}
void a_vexp(double* dst, const double* a, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(dst + i, exp4(_mm256_loadu_pd(a + i)));
  for (; i < n; ++i) dst[i] = std::exp(a[i]);
}
void a_vsigmoid(double* dst, const double* a, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d e = exp4(_mm256_sub_pd(_mm256_setzero_pd(), _mm256_loadu_pd(a + i)));
    _mm256_storeu_pd(dst + i, _mm256_div_pd(one, _mm256_add_pd(one, e)));
  }
  for (; i < n; ++i) dst[i] = 1.0 / (1.0 + std::exp(-a[i]));
}
void a_velu(double* dst, const double* a, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d x = _mm256_loadu_pd(a + i);
    __m256d neg = _mm256_sub_pd(exp4(x), one);
    __m256d mask = _mm256_cmp_pd(x, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(dst + i, _mm256_blendv_pd(neg, x, mask));
  }
  for (; i < n; ++i) dst[i] = a[i] > 0.0 ? a[i] : std::exp(a[i]) - 1.0;
}
void a_velu_bwd(double* dx, const double* x, const double* gy, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    __m256d d = _mm256_blendv_pd(exp4(xv), one, _mm256_cmp_pd(xv, zero, _CMP_GT_OQ));
    _mm256_storeu_pd(dx + i, _mm256_mul_pd(_mm256_loadu_pd(gy + i), d));
  }
  for (; i < n; ++i) dx[i] = gy[i] * (x[i] > 0.0 ? 1.0 : std::exp(x[i]));
}
void a_vsigmoid_bwd(double* dx, const double* s, const double* gy,
                    std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d sv = _mm256_loadu_pd(s + i);
    __m256d d = _mm256_mul_pd(sv, _mm256_sub_pd(one, sv));
    _mm256_storeu_pd(dx + i, _mm256_mul_pd(_mm256_loadu_pd(gy + i), d));
  }
  for (; i < n; ++i) dx[i] = gy[i] * s[i] * (1.0 - s[i]);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double a_dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}
double a_sum(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i];
  return r;
}
double a_max(const double* a, std::size_t n) {
  double m = a[0];
  std::size_t i = 0;
  if (n >= 4) {
    __m256d vm = _mm256_loadu_pd(a);
    for (i = 4; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(a + i));
    __m128d lo = _mm_max_pd(_mm256_castpd256_pd128(vm), _mm256_extractf128_pd(vm, 1));
    m = _mm_cvtsd_f64(_mm_max_sd(lo, _mm_unpackhi_pd(lo, lo)));
  }
  for (; i < n; ++i)
    if (a[i] > m) m = a[i];
  return m;
}

// Row-major GEMM. The NN and TN cases stream along rows of C with FMA;
// the *T cases use 4-wide dot products with a final in-register reduction.
void a_gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
            const double* a, int lda, const double* b, int ldb, double beta,
            double* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    double* crow = c + static_cast<std::ptrdiff_t>(i) * ldc;
    if (beta == 0.0) {
      for (int j = 0; j < n; ++j) crow[j] = 0.0;
    } else if (beta != 1.0) {
      a_scale(crow, crow, beta, static_cast<std::size_t>(n));
    }
  }
  if (!trans_b) {
    // C[i,:] += alpha * op(A)[i,p] * B[p,:]
    for (int i = 0; i < m; ++i) {
      double* crow = c + static_cast<std::ptrdiff_t>(i) * ldc;
      for (int p = 0; p < k; ++p) {
        const double av = alpha * (trans_a ? a[p * lda + i] : a[i * lda + p]);
        if (av == 0.0) continue;
        a_axpy(crow, av, b + static_cast<std::ptrdiff_t>(p) * ldb,
               static_cast<std::size_t>(n));
      }
    }
  } else {
    // C[i,j] += alpha * dot(op(A)[i,:], B[j,:])
    for (int i = 0; i < m; ++i) {
      double* crow = c + static_cast<std::ptrdiff_t>(i) * ldc;
      if (!trans_a) {
        const double* arow = a + static_cast<std::ptrdiff_t>(i) * lda;
        for (int j = 0; j < n; ++j)
          crow[j] += alpha * a_dot(arow, b + static_cast<std::ptrdiff_t>(j) * ldb,
                                   static_cast<std::size_t>(k));
      } else {
        for (int j = 0; j < n; ++j) {
          const double* brow = b + static_cast<std::ptrdiff_t>(j) * ldb;
          double acc = 0.0;
          for (int p = 0; p < k; ++p) acc += a[p * lda + i] * brow[p];
          crow[j] += alpha * acc;
        }
      }
    }
  }
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops table = {
      a_add,  a_sub,      a_mul,  a_div,      a_scale,        a_axpy,
      a_vexp, a_vsigmoid, a_velu, a_velu_bwd, a_vsigmoid_bwd,
      a_dot,  a_sum,      a_max,  a_gemm};
  return table;
}

}  // namespace steer::kern

#endif  // x86-64

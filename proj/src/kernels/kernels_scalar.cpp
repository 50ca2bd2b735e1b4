#include "steer/kernels.hpp"

#include <cmath>

// Reference implementations. Kept deliberately plain: these define the
// semantics that the SIMD variants are tested against.

namespace steer::kern {
namespace {

void s_add(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}
void s_sub(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}
void s_mul(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}
void s_div(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] / b[i];
}
void s_scale(double* dst, const double* a, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] * s;
}
void s_axpy(double* y, double a, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}
void s_vexp(double* dst, const double* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = std::exp(a[i]);
}
void s_vsigmoid(double* dst, const double* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = 1.0 / (1.0 + std::exp(-a[i]));
}
void s_velu(double* dst, const double* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    dst[i] = a[i] > 0.0 ? a[i] : std::expm1(a[i]);
}
void s_velu_bwd(double* dx, const double* x, const double* gy, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    dx[i] = gy[i] * (x[i] > 0.0 ? 1.0 : std::exp(x[i]));
}
void s_vsigmoid_bwd(double* dx, const double* s, const double* gy,
                    std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dx[i] = gy[i] * s[i] * (1.0 - s[i]);
}
double s_dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}
double s_sum(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}
double s_max(const double* a, std::size_t n) {
  double m = a[0];
  for (std::size_t i = 1; i < n; ++i)
    if (a[i] > m) m = a[i];
  return m;
}

void s_gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
            const double* a, int lda, const double* b, int ldb, double beta,
            double* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) {
        const double av = trans_a ? a[p * lda + i] : a[i * lda + p];
        const double bv = trans_b ? b[j * ldb + p] : b[p * ldb + j];
        acc += av * bv;
      }
      double* out = &c[i * ldc + j];
      *out = alpha * acc + (beta == 0.0 ? 0.0 : beta * *out);
    }
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops table = {
      s_add,      s_sub,  s_mul, s_div, s_scale,      s_axpy,
      s_vexp,     s_vsigmoid, s_velu, s_velu_bwd, s_vsigmoid_bwd,
      s_dot,      s_sum,  s_max, s_gemm};
  return table;
}

}  // namespace steer::kern

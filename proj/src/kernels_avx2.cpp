#include "ordbench/kernels.hpp"

// AVX2+FMA variants. Compiled only on x86-64 (see src/CMakeLists.txt);
// avx2_ops_* return null elsewhere and the dispatcher falls back to scalar.

#if defined(__x86_64__) || defined(_M_X64)
#define ORDBENCH_HAVE_AVX2_BUILD 1
#include <immintrin.h>
#else
#define ORDBENCH_HAVE_AVX2_BUILD 0
#endif

namespace ordbench::kernels {

#if ORDBENCH_HAVE_AVX2_BUILD

namespace {

// ---- double, 4 lanes ----

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void add_d(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_d(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_d(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_d(const double* a, double c, double* out, std::size_t n) {
  __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vc));
  for (; i < n; ++i) out[i] = a[i] * c;
}

void axpy_d(double c, const double* x, double* y, std::size_t n) {
  __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(vc, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += c * x[i];
}

double dot_d(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

double sum_d(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i];
  return r;
}

double sumsq_d(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(a + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i] * a[i];
  return r;
}

void matmul_d(const double* a, const double* b, double* c, std::size_t m,
              std::size_t k, std::size_t n) {
  if (n == 1) {
    for (std::size_t i = 0; i < m; ++i) c[i] = dot_d(a + i * k, b, k);
    return;
  }
  for (std::size_t i = 0; i < m * n; ++i) c[i] = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) axpy_d(a[i * k + l], b + l * n, c + i * n, n);
}

void gemm_tn_acc_d(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n) {
  if (n == 1) {
    // c(k) += a(m,k)^T b(m): row-wise axpy vectorizes over k.
    for (std::size_t i = 0; i < m; ++i) axpy_d(b[i], a + i * k, c, k);
    return;
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) axpy_d(a[i * k + l], b + i * n, c + l * n, n);
}

void gemm_nt_acc_d(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n) {
  if (k == 1) {
    for (std::size_t i = 0; i < m; ++i) axpy_d(a[i], b, c + i * n, n);
    return;
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot_d(a + i * k, b + j * k, k);
}

// ---- float, 8 lanes ----

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_hadd_ps(lo, lo);
  lo = _mm_hadd_ps(lo, lo);
  return _mm_cvtss_f32(lo);
}

void add_f(const float* a, const float* b, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_f(const float* a, const float* b, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_f(const float* a, const float* b, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_f(const float* a, float c, float* out, std::size_t n) {
  __m256 vc = _mm256_set1_ps(c);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), vc));
  for (; i < n; ++i) out[i] = a[i] * c;
}

void axpy_f(float c, const float* x, float* y, std::size_t n) {
  __m256 vc = _mm256_set1_ps(c);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(vc, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] += c * x[i];
}

float dot_f(const float* a, const float* b, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
  float r = hsum(acc);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

float sum_f(const float* a, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(a + i));
  float r = hsum(acc);
  for (; i < n; ++i) r += a[i];
  return r;
}

float sumsq_f(const float* a, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 v = _mm256_loadu_ps(a + i);
    acc = _mm256_fmadd_ps(v, v, acc);
  }
  float r = hsum(acc);
  for (; i < n; ++i) r += a[i] * a[i];
  return r;
}

void matmul_f(const float* a, const float* b, float* c, std::size_t m,
              std::size_t k, std::size_t n) {
  if (n == 1) {
    for (std::size_t i = 0; i < m; ++i) c[i] = dot_f(a + i * k, b, k);
    return;
  }
  for (std::size_t i = 0; i < m * n; ++i) c[i] = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) axpy_f(a[i * k + l], b + l * n, c + i * n, n);
}

void gemm_tn_acc_f(const float* a, const float* b, float* c, std::size_t m,
                   std::size_t k, std::size_t n) {
  if (n == 1) {
    for (std::size_t i = 0; i < m; ++i) axpy_f(b[i], a + i * k, c, k);
    return;
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) axpy_f(a[i * k + l], b + i * n, c + l * n, n);
}

void gemm_nt_acc_f(const float* a, const float* b, float* c, std::size_t m,
                   std::size_t k, std::size_t n) {
  if (k == 1) {
    for (std::size_t i = 0; i < m; ++i) axpy_f(a[i], b, c + i * n, n);
    return;
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot_f(a + i * k, b + j * k, k);
}

}  // namespace

const Ops<float>* avx2_ops_f32() {
  if (!avx2_available()) return nullptr;
  static const Ops<float> ops{add_f,   sub_f,   mul_f,    scale_f,
                              axpy_f,  dot_f,   sum_f,    sumsq_f,
                              matmul_f, gemm_tn_acc_f, gemm_nt_acc_f};
  return &ops;
}

const Ops<double>* avx2_ops_f64() {
  if (!avx2_available()) return nullptr;
  static const Ops<double> ops{add_d,   sub_d,   mul_d,    scale_d,
                               axpy_d,  dot_d,   sum_d,    sumsq_d,
                               matmul_d, gemm_tn_acc_d, gemm_nt_acc_d};
  return &ops;
}

#else

const Ops<float>* avx2_ops_f32() { return nullptr; }
const Ops<double>* avx2_ops_f64() { return nullptr; }

#endif  // ORDBENCH_HAVE_AVX2_BUILD

}  // namespace ordbench::kernels

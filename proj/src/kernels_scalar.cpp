#include "ordbench/kernels.hpp"

// Reference kernels. Plain loops, one accumulator, left-to-right order;
// the SIMD backends are checked against these.

namespace ordbench::kernels {
namespace {

template <class T>
void add_(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <class T>
void sub_(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

template <class T>
void mul_(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <class T>
void scale_(const T* a, T c, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * c;
}

template <class T>
void axpy_(T c, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += c * x[i];
}

template <class T>
T dot_(const T* a, const T* b, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <class T>
T sum_(const T* a, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

template <class T>
T sumsq_(const T* a, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
  return acc;
}

template <class T>
void matmul_(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
             std::size_t n) {
  if (n == 1) {
    for (std::size_t i = 0; i < m; ++i) c[i] = dot_(a + i * k, b, k);
    return;
  }
  for (std::size_t i = 0; i < m * n; ++i) c[i] = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) axpy_(a[i * k + l], b + l * n, c + i * n, n);
}

template <class T>
void gemm_tn_acc_(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
                  std::size_t n) {
  // c(k,n) += a(m,k)^T b(m,n)
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) axpy_(a[i * k + l], b + i * n, c + l * n, n);
}

template <class T>
void gemm_nt_acc_(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
                  std::size_t n) {
  // c(m,n) += a(m,k) b(n,k)^T; k == 1 is the outer-product case used by
  // matvec backward.
  if (k == 1) {
    for (std::size_t i = 0; i < m; ++i) axpy_(a[i], b, c + i * n, n);
    return;
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot_(a + i * k, b + j * k, k);
}

template <class T>
constexpr Ops<T> make_ops() {
  return Ops<T>{add_<T>,   sub_<T>,   mul_<T>,    scale_<T>,
                axpy_<T>,  dot_<T>,   sum_<T>,    sumsq_<T>,
                matmul_<T>, gemm_tn_acc_<T>, gemm_nt_acc_<T>};
}

}  // namespace

const Ops<float>& scalar_ops_f32() {
  static constexpr Ops<float> ops = make_ops<float>();
  return ops;
}

const Ops<double>& scalar_ops_f64() {
  static constexpr Ops<double> ops = make_ops<double>();
  return ops;
}

}  // namespace ordbench::kernels

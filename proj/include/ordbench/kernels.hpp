#pragma once

// Dense arithmetic kernels behind the tensor layer.
//
// Every operation has a scalar reference implementation and may have SIMD
// variants (AVX2+FMA on x86-64). A backend is selected once at startup from
// CPU capabilities; set_backend()/ORDBENCH_KERNELS override the choice.
// Elementwise ops are bit-identical across backends. Reductions (dot, sum,
// sumsq, matmul) may differ in rounding because SIMD accumulates in lanes;
// the equivalence tests bound that difference.
//
// Matrices are row-major. Shape arguments follow C(m,n) = A(m,k) * B(k,n).
//
// Transcendentals (exp for softmax, tanh, the sigmoid) are deliberately not
// dispatched: they call libm per element in all backends so model outputs do
// not depend on the backend's polynomial approximations.

#include <cstddef>
#include <string>

namespace ordbench::kernels {

template <class T>
struct Ops {
  void (*add)(const T* a, const T* b, T* out, std::size_t n);
  void (*sub)(const T* a, const T* b, T* out, std::size_t n);
  void (*mul)(const T* a, const T* b, T* out, std::size_t n);
  void (*scale)(const T* a, T c, T* out, std::size_t n);
  void (*axpy)(T c, const T* x, T* y, std::size_t n);  // y += c*x
  T (*dot)(const T* a, const T* b, std::size_t n);
  T (*sum)(const T* a, std::size_t n);
  T (*sumsq)(const T* a, std::size_t n);
  // C(m,n) = A(m,k) B(k,n)
  void (*matmul)(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
                 std::size_t n);
  // C(k,n) += A(m,k)^T B(m,n)
  void (*gemm_tn_acc)(const T* a, const T* b, T* c, std::size_t m,
                      std::size_t k, std::size_t n);
  // C(m,n) += A(m,k) B(n,k)^T
  void (*gemm_nt_acc)(const T* a, const T* b, T* c, std::size_t m,
                      std::size_t k, std::size_t n);
};

const Ops<float>& scalar_ops_f32();
const Ops<double>& scalar_ops_f64();

// Null when the binary was built without AVX2 support or the CPU lacks it.
const Ops<float>* avx2_ops_f32();
const Ops<double>* avx2_ops_f64();

// Active backend used by the tensor layer.
template <class T>
const Ops<T>& active();

// "scalar" or "avx2"; throws std::invalid_argument for unknown or
// unavailable names. The ORDBENCH_KERNELS environment variable applies the
// same override at startup.
void set_backend(const std::string& name);
std::string backend_name();

bool avx2_available();

}  // namespace ordbench::kernels

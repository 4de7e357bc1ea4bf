#include "ordbench/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace ordbench::kernels {

namespace {

enum class Backend { Scalar, Avx2 };

Backend& current() {
  static Backend b = [] {
    if (const char* env = std::getenv("ORDBENCH_KERNELS")) {
      std::string name(env);
      if (name == "scalar") return Backend::Scalar;
      if (name == "avx2") {
        if (!avx2_available())
          throw std::invalid_argument("ORDBENCH_KERNELS=avx2: AVX2 not available");
        return Backend::Avx2;
      }
      throw std::invalid_argument("ORDBENCH_KERNELS: unknown backend '" + name + "'");
    }
    return avx2_available() ? Backend::Avx2 : Backend::Scalar;
  }();
  return b;
}

}  // namespace

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

void set_backend(const std::string& name) {
  if (name == "scalar") {
    current() = Backend::Scalar;
  } else if (name == "avx2") {
    if (!avx2_available())
      throw std::invalid_argument("set_backend: AVX2 not available on this CPU");
    current() = Backend::Avx2;
  } else {
    throw std::invalid_argument("set_backend: unknown backend '" + name + "'");
  }
}

std::string backend_name() {
  return current() == Backend::Avx2 ? "avx2" : "scalar";
}

template <>
const Ops<float>& active<float>() {
  if (current() == Backend::Avx2)
    if (const Ops<float>* ops = avx2_ops_f32()) return *ops;
  return scalar_ops_f32();
}

template <>
const Ops<double>& active<double>() {
  if (current() == Backend::Avx2)
    if (const Ops<double>* ops = avx2_ops_f64()) return *ops;
  return scalar_ops_f64();
}

}  // namespace ordbench::kernels

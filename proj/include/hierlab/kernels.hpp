#pragma once

// Dense double-precision kernels used by the MLP and the optimizers.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The variant is picked once at startup from CPUID; set
// HIERLAB_KERNELS=scalar|avx2 in the environment to force one. Results of
// the two variants agree to rounding (see tests/test_kernels.cpp), but are
// not bit-identical, so a run is only bit-reproducible under one backend.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace hierlab::kernels {

enum class Backend { kScalar, kAvx2 };

struct AdamStep {
  double beta1;
  double beta2;
  double step_size;  // lr / (1 - beta1^t)
  double v_scale;    // 1 / (1 - beta2^t)
  double eps;
};

/// Raw-pointer kernel table. Matrices are dense row-major.
struct KernelTable {
  Backend backend;
  std::string_view name;
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // dst = (1 - tau) * dst + tau * src
  void (*lerp)(double tau, const double* src, double* dst, std::size_t n);
  // x = tanh(x)
  void (*tanh_inplace)(double* x, std::size_t n);
  // grad *= 1 - y^2
  void (*tanh_backward)(const double* y, double* grad, std::size_t n);
  void (*adam)(double* param, const double* grad, double* m, double* v, std::size_t n, const AdamStep& step);
  // out[m x n] = a[m x k] * b[n x k]^T + bias[n]  (bias may be null)
  void (*linear_forward)(const double* a, const double* b, const double* bias, double* out, std::size_t m,
                         std::size_t n, std::size_t k);
  // out[m x k] = a[m x n] * b[n x k]
  void (*matmul_nn)(const double* a, const double* b, double* out, std::size_t m, std::size_t n, std::size_t k);
  // out[n x k] += a[m x n]^T * b[m x k]
  void (*matmul_tn_acc)(const double* a, const double* b, double* out, std::size_t m, std::size_t n,
                        std::size_t k);
};

const KernelTable& scalar_table();
/// Null when the binary was built without AVX2 support.
const KernelTable* avx2_table();

/// Backends usable on this CPU, scalar first.
std::vector<Backend> available_backends();
const KernelTable& table(Backend backend);

/// Currently selected table (thread-safe, initialised on first use).
const KernelTable& active();
/// Overrides the selection process-wide. Throws InputError if unavailable.
void select(Backend backend);

std::string_view backend_name(Backend backend);

// Span conveniences over the active table.
inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}

}  // namespace hierlab::kernels

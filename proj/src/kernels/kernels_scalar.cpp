#include <cmath>

#include "hierlab/kernels.hpp"

namespace hierlab::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void lerp_scalar(double tau, const double* src, double* dst, std::size_t n) {
  // d + tau (s - d) leaves dst untouched where it already equals src.
  for (std::size_t i = 0; i < n; ++i) dst[i] += tau * (src[i] - dst[i]);
}

void tanh_scalar(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::tanh(x[i]);
}

void tanh_backward_scalar(const double* y, double* grad, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) grad[i] *= 1.0 - y[i] * y[i];
}

void adam_scalar(double* param, const double* grad, double* m, double* v, std::size_t n, const AdamStep& s) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grad[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
    param[i] -= s.step_size * m[i] / (std::sqrt(v[i] * s.v_scale) + s.eps);
  }
}

void linear_forward_scalar(const double* a, const double* b, const double* bias, double* out, std::size_t m,
                           std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = dot_scalar(row, b + j * k, k) + (bias ? bias[j] : 0.0);
    }
  }
}

void matmul_nn_scalar(const double* a, const double* b, double* out, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    double* dst = out + i * k;
    for (std::size_t c = 0; c < k; ++c) dst[c] = 0.0;
    for (std::size_t j = 0; j < n; ++j) axpy_scalar(a[i * n + j], b + j * k, dst, k);
  }
}

void matmul_tn_acc_scalar(const double* a, const double* b, double* out, std::size_t m, std::size_t n,
                          std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* brow = b + i * k;
    for (std::size_t j = 0; j < n; ++j) axpy_scalar(a[i * n + j], brow, out + j * k, k);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      Backend::kScalar,   "scalar",       dot_scalar,        axpy_scalar, lerp_scalar, tanh_scalar,
      tanh_backward_scalar, adam_scalar, linear_forward_scalar, matmul_nn_scalar, matmul_tn_acc_scalar,
  };
  return table;
}

}  // namespace hierlab::kernels

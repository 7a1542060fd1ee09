// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma;
// nothing here may run before dispatch has confirmed CPU support.

#include <immintrin.h>

#include <cmath>

#include "hierlab/kernels.hpp"

namespace hierlab::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Lane i of the result is the horizontal sum of input i.
inline __m256d hsum4(__m256d a, __m256d b, __m256d c, __m256d d) {
  const __m256d ab = _mm256_hadd_pd(a, b);  // a01 b01 a23 b23
  const __m256d cd = _mm256_hadd_pd(c, d);  // c01 d01 c23 d23
  const __m256d lo = _mm256_permute2f128_pd(ab, cd, 0x20);
  const __m256d hi = _mm256_permute2f128_pd(ab, cd, 0x31);
  return _mm256_add_pd(lo, hi);
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
    a2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), a2);
    a3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), a3);
  }
  for (; i + 4 <= n; i += 4) a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
  double s = hsum(_mm256_add_pd(_mm256_add_pd(a0, a1), _mm256_add_pd(a2, a3)));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void lerp_avx2(double tau, const double* src, double* dst, std::size_t n) {
  const __m256d vt = _mm256_set1_pd(tau);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_loadu_pd(dst + i);
    _mm256_storeu_pd(dst + i, _mm256_fmadd_pd(vt, _mm256_sub_pd(_mm256_loadu_pd(src + i), d), d));
  }
  for (; i < n; ++i) dst[i] += tau * (src[i] - dst[i]);
}

// tanh(x) = sign(x) * e / (e + 2) with e = expm1(2|x|). expm1 uses the usual
// r = y - n ln2 reduction with a degree-13 Taylor polynomial on |r| <= ln2/2,
// so no cancellation occurs near zero.
inline __m256d tanh_pd(__m256d x) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d sign = _mm256_and_pd(x, sign_mask);
  __m256d y = _mm256_andnot_pd(sign_mask, x);
  y = _mm256_min_pd(_mm256_add_pd(y, y), _mm256_set1_pd(40.0));

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(y, _mm256_set1_pd(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), y);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);

  // q = expm1(r) = r * (1 + r/2 + r^2/6 + ... + r^12/13!)
  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  const __m256d q = _mm256_mul_pd(p, r);

  // scale = 2^n, n in [0, 58]
  const __m128i ni = _mm256_cvtpd_epi32(n);
  __m256i bits = _mm256_cvtepi32_epi64(ni);
  bits = _mm256_slli_epi64(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)), 52);
  const __m256d scale = _mm256_castsi256_pd(bits);

  const __m256d e = _mm256_fmadd_pd(scale, q, _mm256_sub_pd(scale, _mm256_set1_pd(1.0)));
  const __m256d t = _mm256_div_pd(e, _mm256_add_pd(e, _mm256_set1_pd(2.0)));
  return _mm256_or_pd(t, sign);
}

void tanh_avx2(double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, tanh_pd(_mm256_loadu_pd(x + i)));
  if (i < n) {
    alignas(32) double tmp[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t j = i; j < n; ++j) tmp[j - i] = x[j];
    _mm256_store_pd(tmp, tanh_pd(_mm256_load_pd(tmp)));
    for (std::size_t j = i; j < n; ++j) x[j] = tmp[j - i];
  }
}

void tanh_backward_avx2(const double* y, double* grad, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(y + i);
    const __m256d d = _mm256_fnmadd_pd(v, v, one);
    _mm256_storeu_pd(grad + i, _mm256_mul_pd(_mm256_loadu_pd(grad + i), d));
  }
  for (; i < n; ++i) grad[i] *= 1.0 - y[i] * y[i];
}

void adam_avx2(double* param, const double* grad, double* m, double* v, std::size_t n, const AdamStep& s) {
  const __m256d b1 = _mm256_set1_pd(s.beta1), c1 = _mm256_set1_pd(1.0 - s.beta1);
  const __m256d b2 = _mm256_set1_pd(s.beta2), c2 = _mm256_set1_pd(1.0 - s.beta2);
  const __m256d step = _mm256_set1_pd(s.step_size), vs = _mm256_set1_pd(s.v_scale);
  const __m256d eps = _mm256_set1_pd(s.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi = _mm256_fmadd_pd(b1, _mm256_loadu_pd(m + i), _mm256_mul_pd(c1, g));
    const __m256d vi = _mm256_fmadd_pd(b2, _mm256_loadu_pd(v + i), _mm256_mul_pd(c2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vi, vs)), eps);
    const __m256d upd = _mm256_div_pd(_mm256_mul_pd(step, mi), denom);
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), upd));
  }
  for (; i < n; ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grad[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
    param[i] -= s.step_size * m[i] / (std::sqrt(v[i] * s.v_scale) + s.eps);
  }
}

void linear_forward_avx2(const double* a, const double* b, const double* bias, double* out, std::size_t m,
                         std::size_t n, std::size_t k) {
  const std::size_t k4 = k & ~std::size_t{3};
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = a + i * k;
    double* dst = out + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* w0 = b + j * k;
      const double* w1 = w0 + k;
      const double* w2 = w1 + k;
      const double* w3 = w2 + k;
      __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
      for (std::size_t c = 0; c < k4; c += 4) {
        const __m256d x = _mm256_loadu_pd(row + c);
        s0 = _mm256_fmadd_pd(x, _mm256_loadu_pd(w0 + c), s0);
        s1 = _mm256_fmadd_pd(x, _mm256_loadu_pd(w1 + c), s1);
        s2 = _mm256_fmadd_pd(x, _mm256_loadu_pd(w2 + c), s2);
        s3 = _mm256_fmadd_pd(x, _mm256_loadu_pd(w3 + c), s3);
      }
      __m256d sums = hsum4(s0, s1, s2, s3);
      if (k4 < k) {
        alignas(32) double tail[4] = {0.0, 0.0, 0.0, 0.0};
        for (std::size_t c = k4; c < k; ++c) {
          tail[0] += row[c] * w0[c];
          tail[1] += row[c] * w1[c];
          tail[2] += row[c] * w2[c];
          tail[3] += row[c] * w3[c];
        }
        sums = _mm256_add_pd(sums, _mm256_load_pd(tail));
      }
      if (bias) sums = _mm256_add_pd(sums, _mm256_loadu_pd(bias + j));
      _mm256_storeu_pd(dst + j, sums);
    }
    for (; j < n; ++j) dst[j] = dot_avx2(row, b + j * k, k) + (bias ? bias[j] : 0.0);
  }
}

void matmul_nn_avx2(const double* a, const double* b, double* out, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    double* dst = out + i * k;
    std::size_t c = 0;
    for (; c + 16 <= k; c += 16) {
      __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
      for (std::size_t j = 0; j < n; ++j) {
        const __m256d av = _mm256_set1_pd(arow[j]);
        const double* brow = b + j * k + c;
        s0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow), s0);
        s1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 4), s1);
        s2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 8), s2);
        s3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 12), s3);
      }
      _mm256_storeu_pd(dst + c, s0);
      _mm256_storeu_pd(dst + c + 4, s1);
      _mm256_storeu_pd(dst + c + 8, s2);
      _mm256_storeu_pd(dst + c + 12, s3);
    }
    for (; c + 4 <= k; c += 4) {
      __m256d s = _mm256_setzero_pd();
      for (std::size_t j = 0; j < n; ++j) s = _mm256_fmadd_pd(_mm256_set1_pd(arow[j]), _mm256_loadu_pd(b + j * k + c), s);
      _mm256_storeu_pd(dst + c, s);
    }
    for (; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += arow[j] * b[j * k + c];
      dst[c] = s;
    }
  }
}

void matmul_tn_acc_avx2(const double* a, const double* b, double* out, std::size_t m, std::size_t n,
                        std::size_t k) {
  for (std::size_t j = 0; j < n; ++j) {
    double* dst = out + j * k;
    std::size_t c = 0;
    for (; c + 16 <= k; c += 16) {
      __m256d s0 = _mm256_loadu_pd(dst + c), s1 = _mm256_loadu_pd(dst + c + 4);
      __m256d s2 = _mm256_loadu_pd(dst + c + 8), s3 = _mm256_loadu_pd(dst + c + 12);
      for (std::size_t i = 0; i < m; ++i) {
        const __m256d av = _mm256_set1_pd(a[i * n + j]);
        const double* brow = b + i * k + c;
        s0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow), s0);
        s1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 4), s1);
        s2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 8), s2);
        s3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 12), s3);
      }
      _mm256_storeu_pd(dst + c, s0);
      _mm256_storeu_pd(dst + c + 4, s1);
      _mm256_storeu_pd(dst + c + 8, s2);
      _mm256_storeu_pd(dst + c + 12, s3);
    }
    for (; c + 4 <= k; c += 4) {
      __m256d s = _mm256_loadu_pd(dst + c);
      for (std::size_t i = 0; i < m; ++i) s = _mm256_fmadd_pd(_mm256_set1_pd(a[i * n + j]), _mm256_loadu_pd(b + i * k + c), s);
      _mm256_storeu_pd(dst + c, s);
    }
    for (; c < k; ++c) {
      double s = dst[c];
      for (std::size_t i = 0; i < m; ++i) s += a[i * n + j] * b[i * k + c];
      dst[c] = s;
    }
  }
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{
      Backend::kAvx2,     "avx2",       dot_avx2,        axpy_avx2, lerp_avx2, tanh_avx2,
      tanh_backward_avx2, adam_avx2,    linear_forward_avx2, matmul_nn_avx2, matmul_tn_acc_avx2,
  };
  return &table;
}

}  // namespace hierlab::kernels

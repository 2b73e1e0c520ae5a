// AVX2+FMA variants of the float kernels. This translation unit is compiled
// with -mavx2 -mfma on x86 targets only; callers go through kern::active(),
// which checks CPU support at runtime before handing out this table.

#include "pvc/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>

#include <cmath>
#include <cstring>

namespace pvc::kern {
namespace {

void a_gemm_nn(const float* a, int lda, const float* b, int ldb, float* c, int ldc, int m, int k,
               int n, bool acc) {
  const int n8 = n & ~7;
  for (int i = 0; i < m; i++) {
    float* crow = c + static_cast<size_t>(i) * ldc;
    if (!acc) std::memset(crow, 0, sizeof(float) * n);
    const float* arow = a + static_cast<size_t>(i) * lda;
    for (int kk = 0; kk < k; kk++) {
      const float av = arow[kk];
      const __m256 va = _mm256_set1_ps(av);
      const float* brow = b + static_cast<size_t>(kk) * ldb;
      int j = 0;
      for (; j + 16 <= n; j += 16) {
        __m256 c0 = _mm256_loadu_ps(crow + j);
        __m256 c1 = _mm256_loadu_ps(crow + j + 8);
        c0 = _mm256_fmadd_ps(va, _mm256_loadu_ps(brow + j), c0);
        c1 = _mm256_fmadd_ps(va, _mm256_loadu_ps(brow + j + 8), c1);
        _mm256_storeu_ps(crow + j, c0);
        _mm256_storeu_ps(crow + j + 8, c1);
      }
      for (; j < n8; j += 8) {
        __m256 c0 = _mm256_loadu_ps(crow + j);
        c0 = _mm256_fmadd_ps(va, _mm256_loadu_ps(brow + j), c0);
        _mm256_storeu_ps(crow + j, c0);
      }
      for (; j < n; j++) crow[j] += av * brow[j];
    }
  }
}

float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 sh = _mm_movehl_ps(lo, lo);
  lo = _mm_add_ps(lo, sh);
  sh = _mm_shuffle_ps(lo, lo, 1);
  lo = _mm_add_ss(lo, sh);
  return _mm_cvtss_f32(lo);
}

void a_gemm_nt(const float* a, int lda, const float* b, int ldb, float* c, int ldc, int m, int k,
               int n, bool acc) {
  const int k8 = k & ~7;
  for (int i = 0; i < m; i++) {
    const float* arow = a + static_cast<size_t>(i) * lda;
    float* crow = c + static_cast<size_t>(i) * ldc;
    for (int j = 0; j < n; j++) {
      const float* brow = b + static_cast<size_t>(j) * ldb;
      __m256 vs = _mm256_setzero_ps();
      int kk = 0;
      for (; kk < k8; kk += 8) {
        vs = _mm256_fmadd_ps(_mm256_loadu_ps(arow + kk), _mm256_loadu_ps(brow + kk), vs);
      }
      float s = hsum(vs);
      for (; kk < k; kk++) s += arow[kk] * brow[kk];
      crow[j] = acc ? crow[j] + s : s;
    }
  }
}

void a_gemm_tn(const float* a, int lda, const float* b, int ldb, float* c, int ldc, int m, int k,
               int n, bool acc) {
  if (!acc) {
    for (int i = 0; i < m; i++) std::memset(c + static_cast<size_t>(i) * ldc, 0, sizeof(float) * n);
  }
  const int n8 = n & ~7;
  for (int kk = 0; kk < k; kk++) {
    const float* arow = a + static_cast<size_t>(kk) * lda;
    const float* brow = b + static_cast<size_t>(kk) * ldb;
    for (int i = 0; i < m; i++) {
      const float av = arow[i];
      const __m256 va = _mm256_set1_ps(av);
      float* crow = c + static_cast<size_t>(i) * ldc;
      int j = 0;
      for (; j < n8; j += 8) {
        __m256 c0 = _mm256_loadu_ps(crow + j);
        c0 = _mm256_fmadd_ps(va, _mm256_loadu_ps(brow + j), c0);
        _mm256_storeu_ps(crow + j, c0);
      }
      for (; j < n; j++) crow[j] += av * brow[j];
    }
  }
}

void a_vadd(const float* a, const float* b, float* y, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; i++) y[i] = a[i] + b[i];
}

void a_vsub(const float* a, const float* b, float* y, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; i++) y[i] = a[i] - b[i];
}

void a_vmul(const float* a, const float* b, float* y, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; i++) y[i] = a[i] * b[i];
}

void a_axpy(float alpha, const float* x, float* y, size_t n) {
  const __m256 va = _mm256_set1_ps(alpha);
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; i++) y[i] += alpha * x[i];
}

void a_scale_channels(const float* x, const float* g, float* y, int c, size_t spatial, bool acc) {
  for (int ci = 0; ci < c; ci++) {
    const float gv = g[ci];
    const __m256 vg = _mm256_set1_ps(gv);
    const float* xs = x + ci * spatial;
    float* ys = y + ci * spatial;
    size_t s = 0;
    if (acc) {
      for (; s + 8 <= spatial; s += 8)
        _mm256_storeu_ps(ys + s, _mm256_fmadd_ps(vg, _mm256_loadu_ps(xs + s), _mm256_loadu_ps(ys + s)));
      for (; s < spatial; s++) ys[s] += xs[s] * gv;
    } else {
      for (; s + 8 <= spatial; s += 8)
        _mm256_storeu_ps(ys + s, _mm256_mul_ps(vg, _mm256_loadu_ps(xs + s)));
      for (; s < spatial; s++) ys[s] = xs[s] * gv;
    }
  }
}

void a_leaky_relu(const float* x, float* y, size_t n, float slope) {
  const __m256 vs = _mm256_set1_ps(slope);
  const __m256 vzero = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 vx = _mm256_loadu_ps(x + i);
    const __m256 mask = _mm256_cmp_ps(vx, vzero, _CMP_GT_OQ);
    _mm256_storeu_ps(y + i, _mm256_blendv_ps(_mm256_mul_ps(vx, vs), vx, mask));
  }
  for (; i < n; i++) y[i] = x[i] > 0.0f ? x[i] : slope * x[i];
}

void a_leaky_relu_grad(const float* x, const float* dy, float* dx, size_t n, float slope) {
  const __m256 vs = _mm256_set1_ps(slope);
  const __m256 vone = _mm256_set1_ps(1.0f);
  const __m256 vzero = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 vx = _mm256_loadu_ps(x + i);
    const __m256 mask = _mm256_cmp_ps(vx, vzero, _CMP_GT_OQ);
    const __m256 factor = _mm256_blendv_ps(vs, vone, mask);
    _mm256_storeu_ps(dx + i,
                     _mm256_fmadd_ps(_mm256_loadu_ps(dy + i), factor, _mm256_loadu_ps(dx + i)));
  }
  for (; i < n; i++) dx[i] += dy[i] * (x[i] > 0.0f ? 1.0f : slope);
}

float a_dot(const float* a, const float* b, size_t n) {
  __m256 vs = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    vs = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), vs);
  float s = hsum(vs);
  for (; i < n; i++) s += a[i] * b[i];
  return s;
}

float a_sum(const float* x, size_t n) {
  __m256 vs = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) vs = _mm256_add_ps(vs, _mm256_loadu_ps(x + i));
  float s = hsum(vs);
  for (; i < n; i++) s += x[i];
  return s;
}

double a_sum_sq_diff(const float* a, const float* b, size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
    const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(d));
    const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(d, 1));
    acc0 = _mm256_fmadd_pd(lo, lo, acc0);
    acc1 = _mm256_fmadd_pd(hi, hi, acc1);
  }
  const __m256d acc = _mm256_add_pd(acc0, acc1);
  alignas(32) double tmp[4];
  _mm256_store_pd(tmp, acc);
  double s = tmp[0] + tmp[1] + tmp[2] + tmp[3];
  for (; i < n; i++) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s;
}

// Round half away from zero without the trunc(x+0.5) double-rounding bug:
// split |x| into floor + exact fractional remainder, bump when >= 0.5.
void a_round_haz(const float* x, float* y, size_t n) {
  const __m256 sign_mask = _mm256_set1_ps(-0.0f);
  const __m256 half = _mm256_set1_ps(0.5f);
  const __m256 one = _mm256_set1_ps(1.0f);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 vx = _mm256_loadu_ps(x + i);
    const __m256 ax = _mm256_andnot_ps(sign_mask, vx);
    const __m256 fl = _mm256_floor_ps(ax);
    const __m256 frac = _mm256_sub_ps(ax, fl);
    const __m256 bump = _mm256_and_ps(_mm256_cmp_ps(frac, half, _CMP_GE_OQ), one);
    const __m256 mag = _mm256_add_ps(fl, bump);
    _mm256_storeu_ps(y + i, _mm256_or_ps(mag, _mm256_and_ps(sign_mask, vx)));
  }
  for (; i < n; i++) y[i] = std::roundf(x[i]);
}

void a_adam_step(float* p, const float* g, float* m, float* v, size_t n, float lr, float beta1,
                 float beta2, float eps, float bc1, float bc2) {
  const __m256 vb1 = _mm256_set1_ps(beta1);
  const __m256 vb2 = _mm256_set1_ps(beta2);
  const __m256 vcb1 = _mm256_set1_ps(1.0f - beta1);
  const __m256 vcb2 = _mm256_set1_ps(1.0f - beta2);
  const __m256 vlr = _mm256_set1_ps(lr);
  const __m256 veps = _mm256_set1_ps(eps);
  const __m256 vbc1 = _mm256_set1_ps(bc1);
  const __m256 vbc2 = _mm256_set1_ps(bc2);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 vg = _mm256_loadu_ps(g + i);
    __m256 vm = _mm256_loadu_ps(m + i);
    __m256 vv = _mm256_loadu_ps(v + i);
    vm = _mm256_add_ps(_mm256_mul_ps(vb1, vm), _mm256_mul_ps(vcb1, vg));
    vv = _mm256_add_ps(_mm256_mul_ps(vb2, vv), _mm256_mul_ps(vcb2, _mm256_mul_ps(vg, vg)));
    _mm256_storeu_ps(m + i, vm);
    _mm256_storeu_ps(v + i, vv);
    const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(_mm256_mul_ps(vbc2, vv)), veps);
    const __m256 step = _mm256_div_ps(_mm256_mul_ps(vlr, _mm256_mul_ps(vbc1, vm)), denom);
    _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), step));
  }
  for (; i < n; i++) {
    m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
    p[i] -= lr * (bc1 * m[i]) / (std::sqrt(bc2 * v[i]) + eps);
  }
}

constexpr Kernels kAvx2 = {
    "avx2",
    a_gemm_nn,
    a_gemm_nt,
    a_gemm_tn,
    a_vadd,
    a_vsub,
    a_vmul,
    a_axpy,
    a_scale_channels,
    a_leaky_relu,
    a_leaky_relu_grad,
    a_dot,
    a_sum,
    a_sum_sq_diff,
    a_round_haz,
    a_adam_step,
};

}  // namespace

const Kernels* avx2_table() { return &kAvx2; }

}  // namespace pvc::kern

#else  // non-x86

namespace pvc::kern {
const Kernels* avx2_table() { return nullptr; }
}  // namespace pvc::kern

#endif

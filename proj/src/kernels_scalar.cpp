#include <cmath>
#include <cstring>

#include "pvc/kernels.hpp"

namespace pvc::kern {
namespace {

void s_gemm_nn(const float* a, int lda, const float* b, int ldb, float* c, int ldc, int m, int k,
               int n, bool acc) {
  for (int i = 0; i < m; i++) {
    float* crow = c + static_cast<size_t>(i) * ldc;
    if (!acc) std::memset(crow, 0, sizeof(float) * n);
    const float* arow = a + static_cast<size_t>(i) * lda;
    for (int kk = 0; kk < k; kk++) {
      const float av = arow[kk];
      const float* brow = b + static_cast<size_t>(kk) * ldb;
      for (int j = 0; j < n; j++) crow[j] += av * brow[j];
    }
  }
}

void s_gemm_nt(const float* a, int lda, const float* b, int ldb, float* c, int ldc, int m, int k,
               int n, bool acc) {
  for (int i = 0; i < m; i++) {
    const float* arow = a + static_cast<size_t>(i) * lda;
    float* crow = c + static_cast<size_t>(i) * ldc;
    for (int j = 0; j < n; j++) {
      const float* brow = b + static_cast<size_t>(j) * ldb;
      float s = 0.0f;
      for (int kk = 0; kk < k; kk++) s += arow[kk] * brow[kk];
      crow[j] = acc ? crow[j] + s : s;
    }
  }
}

void s_gemm_tn(const float* a, int lda, const float* b, int ldb, float* c, int ldc, int m, int k,
               int n, bool acc) {
  if (!acc) {
    for (int i = 0; i < m; i++) std::memset(c + static_cast<size_t>(i) * ldc, 0, sizeof(float) * n);
  }
  for (int kk = 0; kk < k; kk++) {
    const float* arow = a + static_cast<size_t>(kk) * lda;
    const float* brow = b + static_cast<size_t>(kk) * ldb;
    for (int i = 0; i < m; i++) {
      const float av = arow[i];
      float* crow = c + static_cast<size_t>(i) * ldc;
      for (int j = 0; j < n; j++) crow[j] += av * brow[j];
    }
  }
}

void s_vadd(const float* a, const float* b, float* y, size_t n) {
  for (size_t i = 0; i < n; i++) y[i] = a[i] + b[i];
}

void s_vsub(const float* a, const float* b, float* y, size_t n) {
  for (size_t i = 0; i < n; i++) y[i] = a[i] - b[i];
}

void s_vmul(const float* a, const float* b, float* y, size_t n) {
  for (size_t i = 0; i < n; i++) y[i] = a[i] * b[i];
}

void s_axpy(float alpha, const float* x, float* y, size_t n) {
  for (size_t i = 0; i < n; i++) y[i] += alpha * x[i];
}

void s_scale_channels(const float* x, const float* g, float* y, int c, size_t spatial, bool acc) {
  for (int ci = 0; ci < c; ci++) {
    const float gv = g[ci];
    const float* xs = x + ci * spatial;
    float* ys = y + ci * spatial;
    if (acc) {
      for (size_t s = 0; s < spatial; s++) ys[s] += xs[s] * gv;
    } else {
      for (size_t s = 0; s < spatial; s++) ys[s] = xs[s] * gv;
    }
  }
}

void s_leaky_relu(const float* x, float* y, size_t n, float slope) {
  for (size_t i = 0; i < n; i++) y[i] = x[i] > 0.0f ? x[i] : slope * x[i];
}

void s_leaky_relu_grad(const float* x, const float* dy, float* dx, size_t n, float slope) {
  for (size_t i = 0; i < n; i++) dx[i] += dy[i] * (x[i] > 0.0f ? 1.0f : slope);
}

float s_dot(const float* a, const float* b, size_t n) {
  float s = 0.0f;
  for (size_t i = 0; i < n; i++) s += a[i] * b[i];
  return s;
}

float s_sum(const float* x, size_t n) {
  float s = 0.0f;
  for (size_t i = 0; i < n; i++) s += x[i];
  return s;
}

double s_sum_sq_diff(const float* a, const float* b, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; i++) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s;
}

void s_round_haz(const float* x, float* y, size_t n) {
  for (size_t i = 0; i < n; i++) y[i] = std::roundf(x[i]);
}

void s_adam_step(float* p, const float* g, float* m, float* v, size_t n, float lr, float beta1,
                 float beta2, float eps, float bc1, float bc2) {
  for (size_t i = 0; i < n; i++) {
    m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
    p[i] -= lr * (bc1 * m[i]) / (std::sqrt(bc2 * v[i]) + eps);
  }
}

constexpr Kernels kScalar = {
    "scalar",
    s_gemm_nn,
    s_gemm_nt,
    s_gemm_tn,
    s_vadd,
    s_vsub,
    s_vmul,
    s_axpy,
    s_scale_channels,
    s_leaky_relu,
    s_leaky_relu_grad,
    s_dot,
    s_sum,
    s_sum_sq_diff,
    s_round_haz,
    s_adam_step,
};

}  // namespace

const Kernels& scalar() { return kScalar; }

}  // namespace pvc::kern

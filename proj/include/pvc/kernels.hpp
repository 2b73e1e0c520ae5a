#pragma once

#include <cstddef>
#include <string>

namespace pvc::kern {

// Dense float32 primitives behind the tensor/network code. One scalar
// reference table always exists; wider variants are selected at runtime by
// CPU feature detection and must stay numerically equivalent to the
// reference (see tests/test_kernels.cpp).
//
// Matrices are row-major; lda/ldb/ldc are row strides in elements (pass the
// column count for contiguous data). `acc` accumulates into C instead of
// overwriting it. Accumulation order inside one output element is fixed, so
// results are reproducible for a given table on a given machine.
struct Kernels {
  const char* name;

  // C[M,N] = A[M,K] * B[K,N]
  void (*gemm_nn)(const float* a, int lda, const float* b, int ldb, float* c, int ldc, int m,
                  int k, int n, bool acc);
  // C[M,N] = A[M,K] * B[N,K]^T
  void (*gemm_nt)(const float* a, int lda, const float* b, int ldb, float* c, int ldc, int m,
                  int k, int n, bool acc);
  // C[M,N] = A[K,M]^T * B[K,N]
  void (*gemm_tn)(const float* a, int lda, const float* b, int ldb, float* c, int ldc, int m,
                  int k, int n, bool acc);

  void (*vadd)(const float* a, const float* b, float* y, size_t n);
  void (*vsub)(const float* a, const float* b, float* y, size_t n);
  void (*vmul)(const float* a, const float* b, float* y, size_t n);
  void (*axpy)(float alpha, const float* x, float* y, size_t n);  // y += alpha*x

  // y[c*spatial+s] = x[c*spatial+s] * g[c]  (NCHW per-channel scale)
  void (*scale_channels)(const float* x, const float* g, float* y, int c, size_t spatial, bool acc);

  void (*leaky_relu)(const float* x, float* y, size_t n, float slope);
  // dx += dy * (x > 0 ? 1 : slope)
  void (*leaky_relu_grad)(const float* x, const float* dy, float* dx, size_t n, float slope);

  float (*dot)(const float* a, const float* b, size_t n);
  float (*sum)(const float* x, size_t n);
  double (*sum_sq_diff)(const float* a, const float* b, size_t n);

  // Round half away from zero, elementwise.
  void (*round_haz)(const float* x, float* y, size_t n);

  // Bias-corrected Adam update: m,v updated in place, p -= lr*bc1*m/(sqrt(bc2*v)+eps).
  void (*adam_step)(float* p, const float* g, float* m, float* v, size_t n, float lr, float beta1,
                    float beta2, float eps, float bc1, float bc2);
};

const Kernels& scalar();

// Active table. Chosen once per process: AVX2+FMA when the CPU supports it,
// scalar otherwise. PVC_KERNELS=scalar|avx2|auto overrides.
const Kernels& active();

// Force a backend by name ("scalar", "avx2", "auto"). Throws ConfigError for
// unknown names or unavailable backends. Intended for tests and the CLI.
void select(const std::string& name);

bool avx2_supported();
const Kernels* avx2();  // nullptr when not compiled in or not supported

}  // namespace pvc::kern

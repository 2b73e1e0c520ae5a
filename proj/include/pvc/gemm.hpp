#pragma once

#include "pvc/common.hpp"
#include "pvc/kernels.hpp"

namespace pvc {

// Contiguous-matrix GEMM entry points used by the network code. Large
// products are sharded across the thread pool by output rows (nn, nt) or
// output columns (tn); every C element is still produced by exactly one
// fixed-order accumulation, so the split does not change results.

inline constexpr long kGemmMtThreshold = 1 << 20;  // MACs

inline void gemm_nn(const float* a, const float* b, float* c, int m, int k, int n, bool acc) {
  const auto& kr = kern::active();
  const long macs = static_cast<long>(m) * k * n;
  if (macs < kGemmMtThreshold || m < 2) {
    kr.gemm_nn(a, k, b, n, c, n, m, k, n, acc);
    return;
  }
  parallel_for_ranges(static_cast<size_t>(m), 1, [&](size_t i0, size_t i1) {
    kr.gemm_nn(a + i0 * k, k, b, n, c + i0 * n, n, static_cast<int>(i1 - i0), k, n, acc);
  });
}

inline void gemm_nt(const float* a, const float* b, float* c, int m, int k, int n, bool acc) {
  const auto& kr = kern::active();
  const long macs = static_cast<long>(m) * k * n;
  if (macs < kGemmMtThreshold || m < 2) {
    kr.gemm_nt(a, k, b, k, c, n, m, k, n, acc);
    return;
  }
  parallel_for_ranges(static_cast<size_t>(m), 1, [&](size_t i0, size_t i1) {
    kr.gemm_nt(a + i0 * k, k, b, k, c + i0 * n, n, static_cast<int>(i1 - i0), k, n, acc);
  });
}

inline void gemm_tn(const float* a, const float* b, float* c, int m, int k, int n, bool acc) {
  const auto& kr = kern::active();
  const long macs = static_cast<long>(m) * k * n;
  if (macs < kGemmMtThreshold || n < 16) {
    kr.gemm_tn(a, m, b, n, c, n, m, k, n, acc);
    return;
  }
  parallel_for_ranges(static_cast<size_t>(n), 8, [&](size_t j0, size_t j1) {
    kr.gemm_tn(a, m, b + j0, n, c + j0, n, m, k, static_cast<int>(j1 - j0), acc);
  });
}

}  // namespace pvc

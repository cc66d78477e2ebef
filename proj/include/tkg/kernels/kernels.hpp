#pragma once

// Dense f64 inner loops used by the tensor engine and the evaluator.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant compiled with -mavx2 -mfma. The active backend is chosen once at
// startup from CPU features; TKG_KERNELS=scalar forces the reference path.
// All matrices are row-major and dense.

#include <cstddef>
#include <span>
#include <string_view>

namespace tkg::kernels {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  Backend backend;
  const char* name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out = a * b (elementwise)
  void (*hadamard)(const double* a, const double* b, double* out, std::size_t n);
  double (*l1_distance)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  // C[m x n] += A[m x k] * B[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
  // C[m x n] += A[m x k] * B[n x k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
  // C[m x n] += A[k x m]^T * B[k x n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
  // out[i] = dot(rows[i, :], v) for i < rows
  void (*gemv)(std::size_t rows, std::size_t cols, const double* m, const double* v, double* out);
};

const KernelTable& scalar_kernels();
/// nullptr when the AVX2 variant was not built or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();

/// The table selected for this process.
const KernelTable& active();
/// Overrides the selection (tests and benchmarks). Returns false if the
/// requested backend is unavailable.
bool select(Backend backend);

// Convenience wrappers over the active table.
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  return active().l1_distance(a.data(), b.data(), a.size());
}

}  // namespace tkg::kernels

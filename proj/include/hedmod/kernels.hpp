#pragma once

// Dense numeric kernels used by the autodiff graph.
//
// Two implementations share every signature: `serial` is a plain loop nest kept
// as the reference, and the default (unqualified) functions are OpenMP
// parallel + SIMD versions. Each output element of a parallel kernel is owned
// by exactly one thread and reduced in a fixed order, so results do not depend
// on the thread count.

#include <cstddef>

namespace hedmod::kernels {

// All matrices are row-major and contiguous. Every gemm accumulates into C.

/// C[m x n] += A[m x k] * B[k x n]
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c);
/// C[m x n] += A[m x k] * B[n x k]^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c);
/// C[m x n] += A[k x m]^T * B[k x n]
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c);

/// y += alpha * x
void axpy(std::size_t n, double alpha, const double* x, double* y);
double dot(std::size_t n, const double* x, const double* y);
double sum_squares(std::size_t n, const double* x);

/// One bias-corrected Adam update over a flat parameter block.
void adam_update(std::size_t n, double* param, const double* grad, double* m,
                 double* v, double lr, double beta1, double beta2, double eps,
                 double bias1, double bias2);

namespace serial {
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c);
void axpy(std::size_t n, double alpha, const double* x, double* y);
double dot(std::size_t n, const double* x, const double* y);
double sum_squares(std::size_t n, const double* x);
void adam_update(std::size_t n, double* param, const double* grad, double* m,
                 double* v, double lr, double beta1, double beta2, double eps,
                 double bias1, double bias2);
}  // namespace serial

/// Routes the unqualified kernels to `serial` while alive (per thread).
class ReferenceScope {
 public:
  ReferenceScope();
  ~ReferenceScope();
  ReferenceScope(const ReferenceScope&) = delete;
  ReferenceScope& operator=(const ReferenceScope&) = delete;

 private:
  bool previous_;
};

bool using_reference();

/// Number of OpenMP threads the parallel kernels may use (1 without OpenMP).
int max_threads();

}  // namespace hedmod::kernels

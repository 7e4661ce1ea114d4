#include "hedmod/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hedmod::kernels {

namespace {

thread_local bool g_reference = false;

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 15;
constexpr std::size_t kColumnBlock = 64;

}  // namespace

ReferenceScope::ReferenceScope() : previous_(g_reference) { g_reference = true; }
ReferenceScope::~ReferenceScope() { g_reference = previous_; }
bool using_reference() { return g_reference; }

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] += acc;
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * n + j] += acc;
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * b[p * n + j];
      c[i * n + j] += acc;
    }
  }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot(std::size_t n, const double* x, const double* y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_squares(std::size_t n, const double* x) { return dot(n, x, x); }

void adam_update(std::size_t n, double* param, const double* grad, double* m,
                 double* v, double lr, double beta1, double beta2, double eps,
                 double bias1, double bias2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / bias1;
    const double v_hat = v[i] / bias2;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

}  // namespace serial

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  if (g_reference) return serial::gemm_nn(m, n, k, a, b, c);
  const std::size_t blocks = (n + kColumnBlock - 1) / kColumnBlock;
  const long total = static_cast<long>(m * blocks);
#pragma omp parallel for schedule(static) if (m * n * k > kParallelWork)
  for (long task = 0; task < total; ++task) {
    const std::size_t i = static_cast<std::size_t>(task) / blocks;
    const std::size_t j0 = (static_cast<std::size_t>(task) % blocks) * kColumnBlock;
    const std::size_t j1 = std::min(n, j0 + kColumnBlock);
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = b + p * n;
#pragma omp simd
      for (std::size_t j = j0; j < j1; ++j) crow[j] += aip * brow[j];
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  if (g_reference) return serial::gemm_nt(m, n, k, a, b, c);
  // Parallel over rows of B (typically weight rows) so each is streamed once.
#pragma omp parallel for schedule(static) if (m * n * k > kParallelWork)
  for (long jj = 0; jj < static_cast<long>(n); ++jj) {
    const std::size_t j = static_cast<std::size_t>(jj);
    const double* brow = b + j * k;
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = a + i * k;
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      c[i * n + j] += acc;
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  if (g_reference) return serial::gemm_tn(m, n, k, a, b, c);
#pragma omp parallel for schedule(static) if (m * n * k > kParallelWork)
  for (long ii = 0; ii < static_cast<long>(m); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double api = a[p * m + i];
      if (api == 0.0) continue;
      const double* brow = b + p * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) crow[j] += api * brow[j];
    }
  }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  if (g_reference) return serial::axpy(n, alpha, x, y);
#pragma omp parallel for simd schedule(static) if (n > kParallelWork)
  for (long i = 0; i < static_cast<long>(n); ++i) y[i] += alpha * x[i];
}

double dot(std::size_t n, const double* x, const double* y) {
  if (g_reference) return serial::dot(n, x, y);
  double acc = 0.0;
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_squares(std::size_t n, const double* x) {
  if (g_reference) return serial::sum_squares(n, x);
  double acc = 0.0;
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void adam_update(std::size_t n, double* param, const double* grad, double* m,
                 double* v, double lr, double beta1, double beta2, double eps,
                 double bias1, double bias2) {
  if (g_reference) {
    return serial::adam_update(n, param, grad, m, v, lr, beta1, beta2, eps, bias1,
                               bias2);
  }
#pragma omp parallel for simd schedule(static) if (n > kParallelWork)
  for (long i = 0; i < static_cast<long>(n); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    param[i] -= lr * (m[i] / bias1) / (std::sqrt(v[i] / bias2) + eps);
  }
}

}  // namespace hedmod::kernels

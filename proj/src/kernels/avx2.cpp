#include <immintrin.h>

#include "summ/kernels.hpp"

namespace summ::kernels {
namespace {

inline double hsum(__m256d v) noexcept {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_avx2(const double* x, const double* y, double* z, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(z + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) z[i] = x[i] + y[i];
}

void mul_avx2(const double* x, const double* y, double* z, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(z + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) z[i] = x[i] * y[i];
}

void mul_acc_avx2(const double* x, const double* y, double* z, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(z + i, _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                                            _mm256_loadu_pd(z + i)));
  }
  for (; i < n; ++i) z[i] += x[i] * y[i];
}

// Four rows at a time share each load of x.
void gemv_avx2(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* r0 = a + r * cols;
    const double* r1 = r0 + cols;
    const double* r2 = r1 + cols;
    const double* r3 = r2 + cols;
    __m256d s0 = _mm256_setzero_pd();
    __m256d s1 = _mm256_setzero_pd();
    __m256d s2 = _mm256_setzero_pd();
    __m256d s3 = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      const __m256d vx = _mm256_loadu_pd(x + c);
      s0 = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + c), vx, s0);
      s1 = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + c), vx, s1);
      s2 = _mm256_fmadd_pd(_mm256_loadu_pd(r2 + c), vx, s2);
      s3 = _mm256_fmadd_pd(_mm256_loadu_pd(r3 + c), vx, s3);
    }
    double t0 = hsum(s0);
    double t1 = hsum(s1);
    double t2 = hsum(s2);
    double t3 = hsum(s3);
    for (; c < cols; ++c) {
      t0 += r0[c] * x[c];
      t1 += r1[c] * x[c];
      t2 += r2[c] * x[c];
      t3 += r3[c] * x[c];
    }
    y[r] = t0;
    y[r + 1] = t1;
    y[r + 2] = t2;
    y[r + 3] = t3;
  }
  for (; r < rows; ++r) y[r] = dot_avx2(a + r * cols, x, cols);
}

void gemv_t_acc_avx2(const double* a, std::size_t rows, std::size_t cols, const double* x,
                     double* y) {
  for (std::size_t r = 0; r < rows; ++r) axpy_avx2(x[r], a + r * cols, y, cols);
}

void ger_acc_avx2(double* a, std::size_t rows, std::size_t cols, const double* x, const double* y) {
  for (std::size_t r = 0; r < rows; ++r) axpy_avx2(x[r], y, a + r * cols, cols);
}

constexpr KernelTable kAvx2{
    dot_avx2, axpy_avx2, add_avx2, mul_avx2, mul_acc_avx2,
    gemv_avx2, gemv_t_acc_avx2, ger_acc_avx2,
};

}  // namespace

const KernelTable& avx2_table() noexcept { return kAvx2; }

}  // namespace summ::kernels

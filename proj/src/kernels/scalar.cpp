#include "summ/kernels.hpp"

namespace summ::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add_scalar(const double* x, const double* y, double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] + y[i];
}

void mul_scalar(const double* x, const double* y, double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

void mul_acc_scalar(const double* x, const double* y, double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] += x[i] * y[i];
}

void gemv_scalar(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_scalar(a + r * cols, x, cols);
}

void gemv_t_acc_scalar(const double* a, std::size_t rows, std::size_t cols, const double* x,
                       double* y) {
  for (std::size_t r = 0; r < rows; ++r) axpy_scalar(x[r], a + r * cols, y, cols);
}

void ger_acc_scalar(double* a, std::size_t rows, std::size_t cols, const double* x, const double* y) {
  for (std::size_t r = 0; r < rows; ++r) axpy_scalar(x[r], y, a + r * cols, cols);
}

constexpr KernelTable kScalar{
    dot_scalar, axpy_scalar, add_scalar, mul_scalar, mul_acc_scalar,
    gemv_scalar, gemv_t_acc_scalar, ger_acc_scalar,
};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

}  // namespace summ::kernels

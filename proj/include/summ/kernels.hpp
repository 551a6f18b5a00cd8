#pragma once

// Dense double-precision kernels used by the autograd engine.
//
// Every kernel has a portable scalar reference implementation. Wider variants
// (currently AVX2+FMA on x86-64) are selected once at startup from CPUID and
// can be overridden with force_isa() for equivalence testing.

#include <cstddef>
#include <span>
#include <string_view>

namespace summ::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;

/// Raw entry points. All lengths are element counts; buffers must not alias
/// unless noted.
struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // z = x + y (z may alias x or y)
  void (*add)(const double* x, const double* y, double* z, std::size_t n);
  // z = x * y (z may alias x or y)
  void (*mul)(const double* x, const double* y, double* z, std::size_t n);
  // z += x * y
  void (*mul_acc)(const double* x, const double* y, double* z, std::size_t n);
  // y = A x, A row-major rows x cols
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // y += A^T x
  void (*gemv_t_acc)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // A += x y^T
  void (*ger_acc)(double* a, std::size_t rows, std::size_t cols, const double* x, const double* y);
};

const KernelTable& scalar_table() noexcept;
#if defined(SUMM_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif

bool isa_supported(Isa isa) noexcept;
Isa active_isa() noexcept;
const KernelTable& active() noexcept;

/// Switches the process-wide kernel set. Throws std::invalid_argument when
/// the CPU or build does not support `isa`. Not thread-safe; call before work.
void force_isa(Isa isa);

/// Restores the CPUID-selected default.
void reset_isa() noexcept;

// Span conveniences over the active table.

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

// C (m x n) = A (m x k) * B (k x n)
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) noexcept;
// C (m x n) += A (m x k) * B^T, B is (n x k)
void gemm_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) noexcept;
// C (k x n) += A^T * B, A is (m x k), B is (m x n)
void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) noexcept;

}  // namespace summ::kernels

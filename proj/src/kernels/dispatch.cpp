#include <stdexcept>
#include <string>

#include "summ/kernels.hpp"

namespace summ::kernels {
namespace {

Isa detect() noexcept {
#if defined(SUMM_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::Avx2;
#endif
  return Isa::Scalar;
}

const KernelTable& table_for(Isa isa) noexcept {
#if defined(SUMM_HAVE_AVX2)
  if (isa == Isa::Avx2) return avx2_table();
#endif
  (void)isa;
  return scalar_table();
}

struct State {
  Isa isa = detect();
  const KernelTable* table = &table_for(isa);
};

State& state() noexcept {
  static State s;
  return s;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) noexcept {
  if (isa == Isa::Scalar) return true;
  return detect() == Isa::Avx2;
}

Isa active_isa() noexcept { return state().isa; }

const KernelTable& active() noexcept { return *state().table; }

void force_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("kernel set '" + std::string(isa_name(isa)) + "' is not available");
  }
  state().isa = isa;
  state().table = &table_for(isa);
}

void reset_isa() noexcept {
  state().isa = detect();
  state().table = &table_for(state().isa);
}

void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n) noexcept {
  const KernelTable& t = active();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = c + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] = 0.0;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) t.axpy(arow[p], b + p * n, row, n);
  }
}

void gemm_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) noexcept {
  const KernelTable& t = active();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* row = c + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += t.dot(arow, b + j * k, k);
  }
}

void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) noexcept {
  const KernelTable& t = active();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) t.axpy(arow[p], brow, c + p * n, n);
  }
}

}  // namespace summ::kernels

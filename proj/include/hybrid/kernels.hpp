#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

// Inner loops of the dense scan. Every ISA variant has a scalar reference
// twin; tests/unit/test_kernels.cpp holds them to the reference.

namespace hybrid::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view name(Isa isa);
Isa parse_isa(std::string_view name);

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_norm)(const double* a, std::size_t n);
  /// out[r] = dot(rows + r * dim, query) for r in [0, rows).
  void (*dot_rows)(const double* rows, std::size_t row_count, std::size_t dim,
                   const double* query, double* out);
};

/// Compiled in and usable on this CPU.
bool supported(Isa isa);
std::vector<Isa> supported_isas();

/// Throws ConfigError for an unsupported ISA.
const KernelTable& table(Isa isa);

/// Best supported ISA, unless HYBRID_KERNEL names another one.
Isa detect();

/// Kernel set used by the library. Chosen once at first use.
const KernelTable& active();
/// Overrides the active kernel set (tests, --kernel flag).
void select(Isa isa);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double squared_norm(const double* a, std::size_t n);
void dot_rows(const double* rows, std::size_t row_count, std::size_t dim, const double* query,
              double* out);
}  // namespace scalar

#if defined(HYBRID_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double squared_norm(const double* a, std::size_t n);
void dot_rows(const double* rows, std::size_t row_count, std::size_t dim, const double* query,
              double* out);
}  // namespace avx2
#endif

#if defined(HYBRID_HAVE_NEON)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
double squared_norm(const double* a, std::size_t n);
void dot_rows(const double* rows, std::size_t row_count, std::size_t dim, const double* query,
              double* out);
}  // namespace neon
#endif

}  // namespace hybrid::kernels

#include "hybrid/kernels.hpp"

namespace hybrid::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double squared_norm(const double* a, std::size_t n) { return dot(a, a, n); }

void dot_rows(const double* rows, std::size_t row_count, std::size_t dim, const double* query,
              double* out) {
  for (std::size_t r = 0; r < row_count; ++r) out[r] = dot(rows + r * dim, query, dim);
}

}  // namespace hybrid::kernels::scalar

#include <arm_neon.h>

#include "hybrid/kernels.hpp"

namespace hybrid::kernels::neon {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double squared_norm(const double* a, std::size_t n) { return dot(a, a, n); }

void dot_rows(const double* rows, std::size_t row_count, std::size_t dim, const double* query,
              double* out) {
  for (std::size_t r = 0; r < row_count; ++r) out[r] = dot(rows + r * dim, query, dim);
}

}  // namespace hybrid::kernels::neon

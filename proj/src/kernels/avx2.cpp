// Compiled with -mavx2; only reached after a runtime CPU check.
#include "guidec/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <limits>

namespace guidec::kernels {

namespace {

inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

inline double hmax(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
}

double max_avx2(const double* x, std::size_t n) {
  std::size_t i = 0;
  double m = -std::numeric_limits<double>::infinity();
  if (n >= 4) {
    __m256d acc = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
    m = hmax(acc);
  }
  for (; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double weighted_sum_avx2(const double* w, const double* x, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = zero;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d wv = _mm256_loadu_pd(w + i);
    const __m256d keep = _mm256_cmp_pd(wv, zero, _CMP_GT_OQ);
    const __m256d prod = _mm256_mul_pd(wv, _mm256_loadu_pd(x + i));
    acc = _mm256_add_pd(acc, _mm256_and_pd(keep, prod));
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    if (w[i] > 0.0) s += w[i] * x[i];
  }
  return s;
}

double weighted_diff_sum_avx2(const double* w, const double* x, const double* y, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = zero;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d wv = _mm256_loadu_pd(w + i);
    const __m256d keep = _mm256_cmp_pd(wv, zero, _CMP_GT_OQ);
    const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_add_pd(acc, _mm256_and_pd(keep, _mm256_mul_pd(wv, diff)));
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    if (w[i] > 0.0) s += w[i] * (x[i] - y[i]);
  }
  return s;
}

void affine2_avx2(double a, const double* x, double b, const double* y, double* out,
                  std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  const __m256d bv = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_add_pd(_mm256_mul_pd(av, _mm256_loadu_pd(x + i)),
                                    _mm256_mul_pd(bv, _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void scale_shift_avx2(double a, const double* x, double c, double* out, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  const __m256d cv = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_mul_pd(av, _mm256_loadu_pd(x + i)), cv));
  }
  for (; i < n; ++i) out[i] = a * x[i] + c;
}

}  // namespace

const KernelTable& avx2_table_unchecked() noexcept {
  static const KernelTable table{
      "avx2",          max_avx2,     sum_avx2,         weighted_sum_avx2,
      weighted_diff_sum_avx2, affine2_avx2, scale_shift_avx2,
  };
  return table;
}

}  // namespace guidec::kernels

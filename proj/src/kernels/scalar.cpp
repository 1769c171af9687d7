#include "guidec/kernels.hpp"

#include <algorithm>
#include <limits>

namespace guidec::kernels {

namespace {

double max_scalar(const double* x, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

double sum_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double weighted_sum_scalar(const double* w, const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] > 0.0) s += w[i] * x[i];
  }
  return s;
}

double weighted_diff_sum_scalar(const double* w, const double* x, const double* y,
                                std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] > 0.0) s += w[i] * (x[i] - y[i]);
  }
  return s;
}

void affine2_scalar(double a, const double* x, double b, const double* y, double* out,
                    std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void scale_shift_scalar(double a, const double* x, double c, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + c;
}

}  // namespace

const KernelTable& scalar_table() noexcept {
  static const KernelTable table{
      "scalar",         max_scalar,     sum_scalar,         weighted_sum_scalar,
      weighted_diff_sum_scalar, affine2_scalar, scale_shift_scalar,
  };
  return table;
}

}  // namespace guidec::kernels

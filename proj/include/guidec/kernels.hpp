#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Vector kernels behind the information-theoretic and policy arithmetic.
// Every kernel has a scalar reference; SIMD variants are picked at first use
// from the CPU's capabilities (GUIDEC_KERNELS=scalar forces the reference).
namespace guidec::kernels {

struct KernelTable {
  std::string_view name;
  double (*max)(const double* x, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  // sum over i with w[i] > 0 of w[i] * x[i]; zero weights never touch x.
  double (*weighted_sum)(const double* w, const double* x, std::size_t n);
  // sum over i with w[i] > 0 of w[i] * (x[i] - y[i]).
  double (*weighted_diff_sum)(const double* w, const double* x, const double* y, std::size_t n);
  // out = a * x + b * y
  void (*affine2)(double a, const double* x, double b, const double* y, double* out, std::size_t n);
  // out = a * x + c
  void (*scale_shift)(double a, const double* x, double c, double* out, std::size_t n);
};

const KernelTable& scalar_table() noexcept;
// nullptr when the variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_table() noexcept;

const KernelTable& active() noexcept;
// Overrides the dispatch decision; intended for tests and benchmarks.
void use(const KernelTable& table) noexcept;

double max(std::span<const double> x);
double sum(std::span<const double> x);
double weighted_sum(std::span<const double> w, std::span<const double> x);
double weighted_diff_sum(std::span<const double> w, std::span<const double> x,
                         std::span<const double> y);
void affine2(double a, std::span<const double> x, double b, std::span<const double> y,
             std::span<double> out);
void scale_shift(double a, std::span<const double> x, double c, std::span<double> out);

}  // namespace guidec::kernels

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "guidec/errors.hpp"
#include "guidec/kernels.hpp"

namespace guidec::kernels {

#if defined(GUIDEC_HAVE_AVX2)
const KernelTable& avx2_table_unchecked() noexcept;
#endif

const KernelTable* avx2_table() noexcept {
#if defined(GUIDEC_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") != 0;
  }();
  return supported ? &avx2_table_unchecked() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* detect() noexcept {
  if (const char* env = std::getenv("GUIDEC_KERNELS")) {
    if (std::string_view(env) == "scalar") return &scalar_table();
  }
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() noexcept {
  static std::atomic<const KernelTable*> table{detect()};
  return table;
}

void check_same(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorCode::DimensionMismatch, "kernel operands differ in length");
}

}  // namespace

const KernelTable& active() noexcept { return *slot().load(std::memory_order_acquire); }

void use(const KernelTable& table) noexcept { slot().store(&table, std::memory_order_release); }

double max(std::span<const double> x) { return active().max(x.data(), x.size()); }

double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }

double weighted_sum(std::span<const double> w, std::span<const double> x) {
  check_same(w.size(), x.size());
  return active().weighted_sum(w.data(), x.data(), w.size());
}

double weighted_diff_sum(std::span<const double> w, std::span<const double> x,
                         std::span<const double> y) {
  check_same(w.size(), x.size());
  check_same(w.size(), y.size());
  return active().weighted_diff_sum(w.data(), x.data(), y.data(), w.size());
}

void affine2(double a, std::span<const double> x, double b, std::span<const double> y,
             std::span<double> out) {
  check_same(x.size(), y.size());
  check_same(x.size(), out.size());
  active().affine2(a, x.data(), b, y.data(), out.data(), x.size());
}

void scale_shift(double a, std::span<const double> x, double c, std::span<double> out) {
  check_same(x.size(), out.size());
  active().scale_shift(a, x.data(), c, out.data(), x.size());
}

}  // namespace guidec::kernels

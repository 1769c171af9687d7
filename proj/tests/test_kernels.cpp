#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "guidec/instances.hpp"
#include "guidec/kernels.hpp"
#include "guidec/policies.hpp"
#include "guidec/rng.hpp"

using namespace guidec;
namespace k = guidec::kernels;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> randn(CounterRng& rng, std::size_t n, double scale = 3.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * instances::standard_normal(rng);
  return v;
}

// Sums are reassociated across lanes, so agreement is relative to the
// magnitude of the summands rather than bitwise.
double sum_bound(const std::vector<double>& terms) {
  double s = 0.0;
  for (double t : terms) s += std::abs(t);
  return 8 * std::numeric_limits<double>::epsilon() * (s + 1.0);
}

class KernelEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    simd_ = k::avx2_table();
    if (!simd_) GTEST_SKIP() << "no AVX2 variant on this machine";
  }
  const k::KernelTable* simd_ = nullptr;
  const k::KernelTable& ref_ = k::scalar_table();
};

}  // namespace

TEST_F(KernelEquivalence, MaxAndSum) {
  CounterRng rng(1);
  for (std::size_t n = 1; n <= 67; ++n) {
    auto x = randn(rng, n);
    if (n % 5 == 0) x[n / 2] = -kInf;
    EXPECT_EQ(simd_->max(x.data(), n), ref_.max(x.data(), n)) << n;
    std::erase(x, -kInf);
    EXPECT_NEAR(simd_->sum(x.data(), x.size()), ref_.sum(x.data(), x.size()), sum_bound(x)) << n;
  }
  EXPECT_EQ(simd_->sum(nullptr, 0), 0.0);
}

TEST_F(KernelEquivalence, WeightedSumsSkipZeroWeights) {
  CounterRng rng(2);
  for (std::size_t n = 0; n <= 67; ++n) {
    auto w = randn(rng, n, 1.0);
    for (auto& v : w) v = std::abs(v);
    auto x = randn(rng, n), y = randn(rng, n);
    // Zero weight on -inf log-probabilities must contribute nothing.
    for (std::size_t i = 0; i < n; i += 3) {
      w[i] = 0.0;
      x[i] = -kInf;
      y[i] = kInf;
    }
    std::vector<double> terms;
    for (std::size_t i = 0; i < n; ++i)
      if (w[i] > 0) terms.push_back(w[i] * (std::abs(x[i]) + std::abs(y[i])));
    const double ws = simd_->weighted_sum(w.data(), x.data(), n);
    const double wd = simd_->weighted_diff_sum(w.data(), x.data(), y.data(), n);
    ASSERT_TRUE(std::isfinite(ws));
    ASSERT_TRUE(std::isfinite(wd));
    EXPECT_NEAR(ws, ref_.weighted_sum(w.data(), x.data(), n), sum_bound(terms)) << n;
    EXPECT_NEAR(wd, ref_.weighted_diff_sum(w.data(), x.data(), y.data(), n), sum_bound(terms)) << n;
  }
}

TEST_F(KernelEquivalence, ElementwiseOpsAreBitwise) {
  CounterRng rng(3);
  for (std::size_t n = 0; n <= 67; ++n) {
    auto x = randn(rng, n), y = randn(rng, n);
    std::vector<double> o1(n), o2(n);
    simd_->affine2(1.7, x.data(), -0.3, y.data(), o1.data(), n);
    ref_.affine2(1.7, x.data(), -0.3, y.data(), o2.data(), n);
    EXPECT_EQ(o1, o2) << n;
    simd_->scale_shift(0.25, x.data(), -4.0, o1.data(), n);
    ref_.scale_shift(0.25, x.data(), -4.0, o2.data(), n);
    EXPECT_EQ(o1, o2) << n;
  }
}

TEST_F(KernelEquivalence, PoliciesAgreeAcrossTables) {
  const k::KernelTable& before = k::active();
  CounterRng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.next() % 40;
    const TokenDist pc = instances::random_dist(rng, n), pu = instances::random_dist(rng, n);
    const auto q = instances::random_q(rng, n);
    auto run = [&] {
      return std::vector<TokenDist>{temperature_policy(pc, 0.3), classifier_free_policy(pc, pu, 2.0),
                                    kl_guided_policy(pc, pu, 0.7),
                                    classifier_guidance_policy(pc, q_over_v_ratios(q, pc), 1.5)};
    };
    k::use(ref_);
    const auto a = run();
    k::use(*simd_);
    const auto b = run();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(linf_distance(a[i], b[i]), 1e-14);
  }
  k::use(before);
}

TEST(KernelDispatch, ScalarAlwaysAvailable) {
  EXPECT_EQ(k::scalar_table().name, "scalar");
  const double x[] = {1.0, 5.0, -2.0};
  EXPECT_EQ(k::scalar_table().max(x, 3), 5.0);
  EXPECT_EQ(k::scalar_table().sum(x, 3), 4.0);
  EXPECT_THROW(k::weighted_sum(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), Error);
}

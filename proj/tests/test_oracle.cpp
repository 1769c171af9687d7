#include <cmath>

#include <gtest/gtest.h>

#include "guidec/infotheory.hpp"
#include "guidec/instances.hpp"
#include "guidec/oracle.hpp"
#include "guidec/policies.hpp"
#include "oracles.hpp"

using namespace guidec;
using K = Objective::TermKind;

namespace {

TokenDist dist(std::vector<double> p) { return TokenDist::from_probs(std::move(p)); }

SimplexProblem neg_kl(std::vector<double> p) {
  Objective j(p.size());
  j.add(K::kl, -1.0, std::move(p));
  return SimplexProblem::from(std::move(j));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no guidec::Error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(ExponentiatedGradient, MinimizesKl) {
  const auto r = maximize_exponentiated_gradient(neg_kl({0.7, 0.3}), 1);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(linf_distance(r.argmax, dist({0.7, 0.3})), 1e-5);
}

TEST(ExponentiatedGradient, LinearObjectiveGoesToVertex) {
  Objective j(2);
  j.add(K::cross_entropy, -1.0, {0.8, 0.2});
  const auto r = maximize_exponentiated_gradient(SimplexProblem::from(std::move(j)), 2);
  EXPECT_LE(linf_distance(r.argmax, TokenDist::one_hot(2, 0)), 1e-4);
}

TEST(ExponentiatedGradient, TiltedAnchor) {
  Objective j(2);
  j.add(K::expectation, 1.0, {std::log(2.0), 0.0}).add(K::kl, -1.0, {0.5, 0.5});
  const auto r = maximize_exponentiated_gradient(SimplexProblem::from(std::move(j)), 3);
  // pi ∝ p e^g = [0.5 * 2, 0.5].
  EXPECT_LE(oracles::linf(r.argmax, oracles::normalize({1.0L, 0.5L})), 1e-5);
}

TEST(ExponentiatedGradient, ReportsIterationCap) {
  Objective j(3);
  j.add(K::cross_entropy, -1.0, {0.5, 0.3, 0.2});
  AscentConfig cfg;
  cfg.max_iterations = 5;
  const auto r = maximize_exponentiated_gradient(SimplexProblem::from(std::move(j), cfg), 4);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.argmax.argmax(), 0u);
  EXPECT_EQ(r.iterations, 5);
}

TEST(ExponentiatedGradient, RestartsAgreeOnConcaveProblems) {
  CounterRng rng(41);
  for (int i = 0; i < 30; ++i) {
    const std::size_t n = 2 + rng.next() % 15;
    const GuidanceInputs in{instances::random_dist(rng, n), instances::random_dist(rng, n), std::nullopt};
    const auto j = make_objective(PolicySpec::classifier_free(1.0 + i % 3), in);
    // Different seeds give different random starts.
    std::vector<TokenDist> finals;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      finals.push_back(maximize_exponentiated_gradient(SimplexProblem::from(j), seed * 7919).argmax);
    }
    for (const auto& f : finals) EXPECT_LE(linf_distance(f, finals.front()), 1e-4);
  }
}

TEST(ExponentiatedGradient, RejectsDegenerateProblems) {
  EXPECT_EQ(code_of([] { maximize_exponentiated_gradient(neg_kl({1.0}), 0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { maximize_exponentiated_gradient(SimplexProblem{}, 0); }), ErrorCode::InvalidArgument);
}

TEST(Grid, Examples) {
  EXPECT_LE(linf_distance(maximize_grid(neg_kl({0.7, 0.3}), 1e-3).argmax, dist({0.7, 0.3})), 1e-3);

  const GuidanceInputs in{dist({0.8, 0.2}), std::nullopt, std::nullopt};
  const auto thm4 = SimplexProblem::from(make_objective(PolicySpec::with_temperature(0.5), in));
  const auto closed = temperature_policy(in.p_cond, 0.5);
  EXPECT_LE(linf_distance(maximize_grid(thm4, 1e-3).argmax, closed), 2e-3);
  EXPECT_LE(oracles::linf(closed, oracles::normalize({0.64L, 0.04L})), 1e-15);

  const GuidanceInputs u{TokenDist::uniform(3), TokenDist::uniform(3), std::nullopt};
  const auto flat = SimplexProblem::from(make_objective(PolicySpec::classifier_free(0.0), u));
  EXPECT_LE(linf_distance(maximize_grid(flat, 1e-3).argmax, TokenDist::uniform(3)), 1e-3);
}

TEST(Grid, Errors) {
  EXPECT_EQ(code_of([] { maximize_grid(neg_kl({0.25, 0.25, 0.25, 0.25}), 1e-2); }), ErrorCode::DimensionTooLarge);
  EXPECT_EQ(code_of([] { maximize_grid(neg_kl({0.5, 0.5}), 0.1); }), ErrorCode::InvalidArgument);
}

TEST(Grid, AgreesWithAscent) {
  CounterRng rng(42);
  for (int i = 0; i < 40; ++i) {
    const std::size_t n = 2 + i % 2;
    const GuidanceInputs in{instances::random_dist(rng, n), instances::random_dist(rng, n), std::nullopt};
    const double step = n == 2 ? 1e-4 : 1e-3;
    const auto problem = SimplexProblem::from(make_objective(PolicySpec::kl_guided(0.7), in));
    const auto grid = maximize_grid(problem, step);
    const auto eg = maximize_exponentiated_gradient(problem, 7);
    EXPECT_LE(linf_distance(grid.argmax, eg.argmax), 2 * step);
    EXPECT_GE(eg.value, grid.value - 1e-12);
  }
}

TEST(GradientCheck, Examples) {
  const GuidanceInputs in{dist({0.6, 0.3, 0.1}), dist({0.2, 0.5, 0.3}), std::nullopt};
  const auto thm4 = SimplexProblem::from(make_objective(PolicySpec::with_temperature(0.4), in));
  EXPECT_LE(gradient_check(thm4, TokenDist::uniform(3)), 1e-5);
  CounterRng rng(43);
  const auto thm2 = SimplexProblem::from(make_objective(PolicySpec::classifier_free(2.0), in));
  EXPECT_LE(gradient_check(thm2, instances::random_interior_point(rng, 3, 1e-3)), 1e-5);
  const auto thm5 = SimplexProblem::from(make_objective(PolicySpec::greedy(), in));
  EXPECT_LE(gradient_check(thm5, instances::random_interior_point(rng, 3, 1e-3)), 1e-7);
}

TEST(GradientCheck, CatchesWrongGradient) {
  auto p = neg_kl({0.6, 0.4});
  p.gradient = [](std::span<const double> x) { return std::vector<double>{x[0], 0.0}; };
  EXPECT_GT(gradient_check(p, TokenDist::uniform(2)), 1e-2);
}

TEST(GradientCheck, RejectsBoundaryPoints) {
  EXPECT_EQ(code_of([] { gradient_check(neg_kl({0.5, 0.5}), dist({0.99995, 0.00005})); }),
            ErrorCode::PointTooCloseToBoundary);
}

TEST(SelfReferential, ZeroLambdaIsAnchor) {
  const auto pc = dist({0.5, 0.3, 0.2}), pu = dist({0.2, 0.3, 0.5});
  const auto r = solve_self_referential(pc, pu, 0.0);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(linf_distance(r.policy, pc), 1e-6);
  EXPECT_LE(linf_distance(r.stripped_policy, pu), 1e-6);
}

// For lambda < 1 each inner problem is concave with maximizer
// pi ∝ (P / pi_s^lambda)^(1/(1-lambda)); a reported fixed point must satisfy it.
TEST(SelfReferential, ConvergedResultIsAFixedPoint) {
  CounterRng rng(44);
  int converged = 0;
  for (int i = 0; i < 10; ++i) {
    const std::size_t n = 2 + rng.next() % 5;
    const auto pc = instances::random_dist(rng, n, 0.7), pu = instances::random_dist(rng, n, 0.7);
    const double lambda = 0.3;
    const auto r = solve_self_referential(pc, pu, lambda);
    if (!r.converged) continue;
    ++converged;
    oracles::Vec w(n);
    for (std::size_t a = 0; a < n; ++a)
      w[a] = std::pow(static_cast<long double>(pc.prob(a)) / std::pow(static_cast<long double>(r.stripped_policy.prob(a)), lambda),
                      1.0L / (1.0L - lambda));
    EXPECT_LE(oracles::linf(r.policy, oracles::normalize(w)), 1e-5);
  }
  EXPECT_GT(converged, 0);
}

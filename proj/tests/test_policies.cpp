#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "guidec/infotheory.hpp"
#include "guidec/instances.hpp"
#include "guidec/objectives.hpp"
#include "guidec/policies.hpp"
#include "oracles.hpp"

using namespace guidec;

namespace {

TokenDist dist(std::vector<double> p) { return TokenDist::from_probs(std::move(p)); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no guidec::Error thrown";
  return ErrorCode::InvalidArgument;
}

// Independent optimality certificate: at an interior maximizer of a smooth
// objective on the simplex every partial derivative takes the same value.
double stationarity(const Objective& j, const TokenDist& pi) {
  const auto g = j.gradient(pi.probs());
  const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
  return *hi - *lo;
}

}  // namespace

TEST(Greedy, Examples) {
  EXPECT_EQ(greedy_policy(dist({0.8, 0.2})), TokenDist::one_hot(2, 0));
  EXPECT_EQ(greedy_policy(dist({0.5, 0.5})), TokenDist::one_hot(2, 0));
  EXPECT_EQ(greedy_policy(TokenDist::uniform(3)), TokenDist::one_hot(3, 0));
  EXPECT_EQ(greedy_policy(dist({0.2, 0.3, 0.5})), TokenDist::one_hot(3, 2));
}

TEST(Temperature, Examples) {
  const auto p = dist({0.8, 0.2});
  EXPECT_LE(linf_distance(temperature_policy(p, 1.0), p), 1e-15);
  const auto ref = oracles::normalize({0.64L, 0.04L});
  EXPECT_LE(oracles::linf(temperature_policy(p, 0.5), ref), 1e-15);
  EXPECT_NEAR(temperature_policy(p, 0.5).prob(0), 0.941176, 1e-6);
  EXPECT_GE(temperature_policy(p, 1e-3).prob(0), 0.999999);
  EXPECT_EQ(code_of([&] { temperature_policy(p, 0.0); }), ErrorCode::NonPositiveTemperature);
  EXPECT_EQ(code_of([&] { temperature_policy(p, -1.0); }), ErrorCode::NonPositiveTemperature);
}

TEST(DynamicLambda, Examples) {
  const double sigma = 0.37;
  auto d = dynamic_lambda(0.0, sigma);
  EXPECT_EQ(d.lambda, 0.0);
  EXPECT_EQ(d.temperature, 1.0);
  d = dynamic_lambda(sigma, sigma);
  EXPECT_NEAR(d.lambda, 1.0, 1e-15);
  EXPECT_NEAR(d.temperature, 0.5, 1e-15);
  d = dynamic_lambda(2 * sigma, sigma);
  EXPECT_NEAR(d.lambda, 3.0, 1e-15);
  EXPECT_NEAR(d.temperature, 0.25, 1e-15);
  EXPECT_EQ(code_of([] { dynamic_lambda(-1e-3, 1.0); }), ErrorCode::NegativeKL);
  EXPECT_EQ(code_of([] { dynamic_lambda(1.0, 0.0); }), ErrorCode::InvalidArgument);
}

TEST(DynamicLambda, ShapesAreIncreasingFromZero) {
  for (HShape h : {HShape::exp2, HShape::linear, HShape::quadratic}) {
    EXPECT_EQ(dynamic_lambda(0.0, 1.3, h).lambda, 0.0);
    double prev = 0.0;
    for (double kl = 0.01; kl < 5; kl += 0.01) {
      const auto d = dynamic_lambda(kl, 1.3, h);
      EXPECT_GT(d.lambda, prev);
      EXPECT_NEAR(d.temperature, 1.0 / (d.lambda + 1.0), 1e-15);
      prev = d.lambda;
    }
  }
  // Default shape: f = 0.5^(kl / sigma).
  for (double kl : {0.1, 0.7, 2.5}) EXPECT_NEAR(dynamic_lambda(kl, 0.9).temperature, std::pow(0.5, kl / 0.9), 1e-15);
}

TEST(KlGuided, Examples) {
  const auto p = dist({0.8, 0.2});
  EXPECT_EQ(kl_guided_policy(p, p, 1.0), p);
  // Pick sigma = KL so lambda = 1 and the exponent is 2.
  const auto pu = dist({0.3, 0.7});
  const double sigma = kl_divergence(p, pu);
  EXPECT_LE(oracles::linf(kl_guided_policy(p, pu, sigma), oracles::normalize({0.64L, 0.04L})), 1e-12);
  EXPECT_LE(linf_distance(kl_guided_policy(p, pu, 1e12), p), 1e-12);
  EXPECT_EQ(code_of([&] { kl_guided_policy(p, TokenDist::uniform(3), 1.0); }), ErrorCode::DimensionMismatch);
}

TEST(ClassifierGuidance, Examples) {
  const auto p = dist({0.3, 0.5, 0.2});
  EXPECT_LE(linf_distance(classifier_guidance_policy(p, std::vector<double>{2.0, 0.5, 1.0}, 0.0), p), 1e-15);
  EXPECT_LE(linf_distance(classifier_guidance_policy(p, std::vector<double>{1.0, 1.0, 1.0}, 3.0), p), 1e-15);
  const auto u = TokenDist::uniform(2);
  const std::vector<double> ratios{1.0 / 0.75, 0.5 / 0.75};
  const auto ref = oracles::normalize({0.5L * 4 / 3, 0.5L * 2 / 3});
  EXPECT_LE(oracles::linf(classifier_guidance_policy(u, ratios, 1.0), ref), 1e-15);
  EXPECT_NEAR(classifier_guidance_policy(u, ratios, 1.0).prob(0), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(code_of([&] { classifier_guidance_policy(u, ratios, -1.0); }), ErrorCode::NegativeLambda);
  EXPECT_EQ(code_of([&] { classifier_guidance_policy(u, std::vector<double>{1.0}, 1.0); }),
            ErrorCode::DimensionMismatch);
}

TEST(ClassifierGuidance, ZeroRatioIsFloored) {
  const auto u = TokenDist::uniform(2);
  const auto pi = classifier_guidance_policy(u, std::vector<double>{1.0, 0.0}, 2.0);
  EXPECT_TRUE(std::isfinite(pi.log_prob(1)));
  EXPECT_NEAR(pi.prob(1), kQFloor * kQFloor / (1 + kQFloor * kQFloor), 1e-30);
}

TEST(QOverV, RatiosAgainstAnchor) {
  const auto p = dist({0.25, 0.75});
  const auto r = q_over_v_ratios(std::vector<double>{1.0, 0.5}, p);
  const double v = 0.25 * 1.0 + 0.75 * 0.5;
  EXPECT_NEAR(r[0], 1.0 / v, 1e-15);
  EXPECT_NEAR(r[1], 0.5 / v, 1e-15);
  EXPECT_NEAR(0.25 * r[0] + 0.75 * r[1], 1.0, 1e-15);
  EXPECT_EQ(q_over_v_ratios(std::vector<double>{0.0, 0.0}, p), (std::vector<double>{1.0, 1.0}));
}

TEST(ClassifierFree, Examples) {
  const auto pc = dist({0.6, 0.4}), pu = dist({0.3, 0.7});
  EXPECT_LE(linf_distance(classifier_free_policy(pc, pu, 0.0), pc), 1e-15);
  for (double lambda : {0.5, 1.0, 7.0}) EXPECT_LE(linf_distance(classifier_free_policy(pc, pc, lambda), pc), 1e-15);
  const auto ref = oracles::normalize({0.36L / 0.3L, 0.16L / 0.7L});
  EXPECT_LE(oracles::linf(classifier_free_policy(pc, pu, 1.0), ref), 1e-15);
  EXPECT_NEAR(classifier_free_policy(pc, pu, 1.0).prob(0), 0.84, 1e-15);
  EXPECT_EQ(code_of([&] { classifier_free_policy(pc, pu, -0.5); }), ErrorCode::NegativeLambda);
  EXPECT_EQ(code_of([&] { classifier_free_policy(pc, TokenDist::uniform(3), 1.0); }), ErrorCode::DimensionMismatch);
}

TEST(ApplyPolicy, RequiresInputs) {
  const GuidanceInputs bare{TokenDist::uniform(3), std::nullopt, std::nullopt};
  EXPECT_EQ(code_of([&] { apply_policy(PolicySpec::classifier_free(1), bare); }), ErrorCode::MissingGuidanceInput);
  EXPECT_EQ(code_of([&] { apply_policy(PolicySpec::kl_guided(1), bare); }), ErrorCode::MissingGuidanceInput);
  EXPECT_EQ(code_of([&] { apply_policy(PolicySpec::classifier_guidance(1), bare); }), ErrorCode::MissingGuidanceInput);
  EXPECT_EQ(apply_policy(PolicySpec::greedy(), bare), TokenDist::one_hot(3, 0));
}

TEST(Objective, Examples) {
  const auto p = dist({0.8, 0.2});
  const GuidanceInputs in{p, dist({0.5, 0.5}), std::vector<double>{1.2, 0.2}};
  EXPECT_NEAR(objective_value(PolicySpec::with_temperature(1.0), p, in), 0.0, 1e-15);
  EXPECT_NEAR(objective_value(PolicySpec::greedy(), TokenDist::one_hot(2, 0), in), std::log(0.8), 1e-15);
  EXPECT_NEAR(objective_value(PolicySpec::greedy(), TokenDist::one_hot(2, 0), in), -0.223144, 1e-6);
  CounterRng rng(31);
  for (int i = 0; i < 50; ++i) {
    const auto c = instances::random_dist(rng, 2);
    EXPECT_NEAR(objective_value(PolicySpec::classifier_free(0.0), c, in), -kl_divergence(c, p), 1e-14);
    EXPECT_LE(objective_value(PolicySpec::classifier_free(0.0), c, in),
              objective_value(PolicySpec::classifier_free(0.0), p, in));
  }
  EXPECT_EQ(code_of([&] { objective_value(PolicySpec::classifier_free(1.0), p, GuidanceInputs{p, {}, {}}); }),
            ErrorCode::MissingGuidanceInput);
}

// Each value checked against a long-double evaluation of its informational form.
TEST(Objective, MatchesInformationalForms) {
  CounterRng rng(32);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 2 + rng.next() % 10;
    const auto pc = instances::random_dist(rng, n), pu = instances::random_dist(rng, n);
    const auto q = instances::random_q(rng, n);
    const auto ratios = q_over_v_ratios(q, pc);
    const GuidanceInputs in{pc, pu, ratios};
    const auto pi = instances::random_dist(rng, n);
    const auto P = oracles::to_vec(pc), U = oracles::to_vec(pu), Pi = oracles::to_vec(pi);
    const double lambda = 0.1 + 3 * rng.uniform(), t = 0.1 + 2 * rng.uniform(), sigma = 0.2 + rng.uniform();

    long double e_cg = 0, e_cf = 0;
    for (std::size_t a = 0; a < n; ++a) {
      e_cg += Pi[a] * std::log(static_cast<long double>(ratios[a]));
      e_cf += Pi[a] * std::log(P[a] / U[a]);
    }
    const long double kl = oracles::kl(Pi, P), ce = oracles::cross_entropy(Pi, P), h = oracles::entropy(Pi);
    const double dyn = dynamic_lambda(kl_divergence(pc, pu), sigma).lambda;
    EXPECT_NEAR(objective_value(PolicySpec::classifier_guidance(lambda), pi, in), double(lambda * e_cg - kl), 1e-12);
    EXPECT_NEAR(objective_value(PolicySpec::classifier_free(lambda), pi, in), double(lambda * e_cf - kl), 1e-12);
    EXPECT_NEAR(objective_value(PolicySpec::kl_guided(sigma), pi, in), double(-dyn * ce - kl), 1e-11);
    EXPECT_NEAR(objective_value(PolicySpec::with_temperature(t), pi, in), double(-(1 / t - 1) * ce - kl), 1e-11);
    EXPECT_NEAR(objective_value(PolicySpec::with_temperature(t), pi, in), double(-((1 / t) * kl + (1 / t - 1) * h)), 1e-11);
    EXPECT_NEAR(objective_value(PolicySpec::with_temperature(t), pi, in, TemperatureForm::cross_entropy),
                double(-(t * kl + (1 - t) * ce)), 1e-12);
    EXPECT_NEAR(objective_value(PolicySpec::greedy(), pi, in), double(-ce), 1e-12);
  }
}

TEST(Objective, TemperatureFormsShareArgmax) {
  CounterRng rng(33);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 2 + rng.next() % 10;
    const GuidanceInputs in{instances::random_dist(rng, n), std::nullopt, std::nullopt};
    const double t = 0.1 + 2 * rng.uniform();
    const auto spec = PolicySpec::with_temperature(t);
    const auto closed = temperature_policy(in.p_cond, t);
    const auto je = make_objective(spec, in, TemperatureForm::entropy);
    const auto jc = make_objective(spec, in, TemperatureForm::cross_entropy);
    EXPECT_LE(stationarity(je, closed), 1e-9);
    EXPECT_LE(stationarity(jc, closed), 1e-9);
    const auto other = instances::random_dist(rng, n);
    // The forms differ by the positive factor 1/T.
    EXPECT_NEAR(je.value(other.probs()), jc.value(other.probs()) / t, 1e-10);
  }
}

// The closed forms satisfy the first-order conditions of their objectives
// and beat random perturbations.
TEST(ClosedForms, AreStationaryMaximizers) {
  CounterRng rng(34);
  for (int i = 0; i < 300; ++i) {
    const std::size_t n = 2 + rng.next() % 15;
    const GuidanceInputs in{instances::random_dist(rng, n), instances::random_dist(rng, n),
                            std::nullopt};
    GuidanceInputs with_q = in;
    with_q.q_over_v = q_over_v_ratios(instances::random_q(rng, n), in.p_cond);
    const double lambda = std::array{0.25, 1.0, 4.0}[i % 3];
    const std::vector<std::pair<PolicySpec, GuidanceInputs>> cases{
        {PolicySpec::classifier_guidance(lambda), with_q},
        {PolicySpec::classifier_free(lambda), in},
        {PolicySpec::kl_guided(0.5 + rng.uniform()), in},
        {PolicySpec::with_temperature(std::array{0.25, 0.5, 2.0}[i % 3]), in},
    };
    for (const auto& [spec, inputs] : cases) {
      const auto j = make_objective(spec, inputs);
      const auto pi = apply_policy(spec, inputs);
      EXPECT_LE(stationarity(j, pi), 1e-8) << to_string(spec.kind);
      const double best = j.value(pi.probs());
      for (int k = 0; k < 5; ++k) {
        const auto other = instances::random_dist(rng, n);
        std::vector<double> mix(n);
        const double w = 1e-3 * rng.uniform();
        for (std::size_t a = 0; a < n; ++a) mix[a] = (1 - w) * pi.prob(a) + w * other.prob(a);
        EXPECT_LE(j.value(mix), best + 1e-12) << to_string(spec.kind);
      }
    }
    // Greedy: the one-hot beats every other vertex and the anchor itself.
    const auto jg = make_objective(PolicySpec::greedy(), in);
    const auto g = greedy_policy(in.p_cond);
    for (std::size_t a = 0; a < n; ++a) EXPECT_LE(jg.value(TokenDist::one_hot(n, a).probs()), jg.value(g.probs()));
    EXPECT_LE(jg.value(in.p_cond.probs()), jg.value(g.probs()));
  }
}

TEST(PolicyProperties, TiltMonotonicity) {
  CounterRng rng(35);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 2 + rng.next() % 15;
    const auto pc = instances::random_dist(rng, n), pu = instances::random_dist(rng, n);
    const auto ratios = q_over_v_ratios(instances::random_q(rng, n), pc);
    std::vector<double> g_cg(n), g_cf(n);
    for (std::size_t a = 0; a < n; ++a) {
      g_cg[a] = std::log(ratios[a]);
      g_cf[a] = pc.log_prob(a) - pu.log_prob(a);
    }
    auto expect = [](const TokenDist& pi, const std::vector<double>& g) {
      double s = 0;
      for (std::size_t a = 0; a < g.size(); ++a) s += pi.prob(a) * g[a];
      return s;
    };
    double prev_cg = -INFINITY, prev_cf = -INFINITY;
    for (double lambda = 0.0; lambda <= 10.0; lambda += 0.25) {
      const double cg = expect(classifier_guidance_policy(pc, ratios, lambda), g_cg);
      const double cf = expect(classifier_free_policy(pc, pu, lambda), g_cf);
      EXPECT_GE(cg, prev_cg - 1e-12);
      EXPECT_GE(cf, prev_cf - 1e-12);
      prev_cg = cg;
      prev_cf = cf;
    }
  }
}

TEST(PolicyProperties, EntropyNondecreasingInTemperature) {
  CounterRng rng(36);
  for (int i = 0; i < 300; ++i) {
    const auto p = instances::random_dist(rng, 2 + rng.next() % 30, 2.0);
    double prev = -1;
    for (double t = 0.02; t <= 2.0 + 1e-12; t += 0.02) {
      const double h = entropy(temperature_policy(p, t));
      EXPECT_GE(h, prev - 1e-12);
      prev = h;
    }
  }
}

TEST(PolicyProperties, GreedyLimit) {
  CounterRng rng(37);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto p = instances::random_dist(rng, 2 + rng.next() % 30);
    auto sorted = std::vector<double>(p.probs().begin(), p.probs().end());
    std::sort(sorted.rbegin(), sorted.rend());
    for (double t : {1e-4, 0.01, 0.3, 1.0, 3.0, 50.0}) EXPECT_EQ(temperature_policy(p, t).argmax(), p.argmax());
    if (sorted[0] - sorted[1] >= 0.01) {
      ++checked;
      EXPECT_LE(linf_distance(temperature_policy(p, 1e-4), greedy_policy(p)), 1e-6);
    }
  }
  EXPECT_GT(checked, 500);
}

TEST(PolicyProperties, StaticLambdaIsTemperature) {
  CounterRng rng(38);
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 2 + rng.next() % 30;
    const auto pc = instances::random_dist(rng, n), pu = instances::random_dist(rng, n);
    for (HShape h : {HShape::exp2, HShape::linear, HShape::quadratic}) {
      const double sigma = 0.3 + rng.uniform();
      const double lambda = dynamic_lambda(kl_divergence(pc, pu), sigma, h).lambda;
      EXPECT_EQ(kl_guided_policy(pc, pu, sigma, h), temperature_policy(pc, 1.0 / (lambda + 1.0)));
    }
  }
}

TEST(PolicyProperties, DenominatorInvariance) {
  CounterRng rng(39);
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 2 + rng.next() % 30;
    const auto p = instances::random_dist(rng, n);
    const auto q = instances::random_q(rng, n);
    const double lambda = 0.1 + 5 * rng.uniform();
    const auto ref = classifier_guidance_policy(p, q, lambda);
    for (double c : {1e-3, 0.37, 1.0, 42.0}) {
      std::vector<double> scaled(q);
      for (auto& v : scaled) v *= c;
      EXPECT_LE(linf_distance(classifier_guidance_policy(p, scaled, lambda), ref), 1e-12);
    }
  }
}

TEST(PolicyProperties, DegenerateReductions) {
  CounterRng rng(40);
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 2 + rng.next() % 30;
    const auto pc = instances::random_dist(rng, n), pu = instances::random_dist(rng, n);
    EXPECT_LE(linf_distance(classifier_guidance_policy(pc, instances::random_q(rng, n), 0.0), pc), 1e-15);
    EXPECT_LE(linf_distance(classifier_free_policy(pc, pu, 0.0), pc), 1e-15);
    EXPECT_EQ(kl_guided_policy(pc, pc, 0.5), pc);
    EXPECT_LE(linf_distance(temperature_policy(pc, 1.0), pc), 1e-15);
  }
}

TEST(PolicyProperties, LargeParametersStayFinite) {
  const auto p = dist({0.5, 0.3, 0.2});
  const auto pi = classifier_free_policy(p, dist({0.2, 0.3, 0.5}), 10.0);
  for (double lp : pi.log_probs()) EXPECT_TRUE(std::isfinite(lp));
  const auto cold = temperature_policy(p, 1e-3);
  EXPECT_EQ(cold.argmax(), 0u);
  EXPECT_NEAR(cold.prob(0), 1.0, 1e-15);
}

#pragma once

#include <cstdint>
#include <memory>

#include "guidec/core.hpp"
#include "guidec/models.hpp"
#include "guidec/rng.hpp"
#include "guidec/valuation.hpp"

// Seeded random problem instances shared by `verify` and the test suites.
namespace guidec::instances {

double standard_normal(CounterRng& rng);

// Full-support distribution: softmax of N(0, scale^2) logits.
TokenDist random_dist(CounterRng& rng, std::size_t n, double scale = 1.5);

// Interior point with every probability >= floor.
TokenDist random_interior_point(CounterRng& rng, std::size_t n, double floor);

// Q values in [lo, 1].
std::vector<double> random_q(CounterRng& rng, std::size_t n, double lo = 0.05);

struct RandomValuation {
  std::shared_ptr<const TabularLM> model;
  ValuationProblem problem;
};

// A small trained model (vocab_size tokens including eos) with two evidence
// ids, a random rule, prompt and limits with horizon <= max_horizon.
RandomValuation random_valuation(CounterRng& rng, std::size_t vocab_size, int max_horizon);

// Order-0 model uniform over {a, b, </s>}, rule contains_token(a), evidence E1,
// horizon 3 with eos suppressed for two steps: V(root) = 0.75.
RandomValuation two_step_scenario();

}  // namespace guidec::instances

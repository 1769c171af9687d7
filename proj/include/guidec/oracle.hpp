#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "guidec/core.hpp"
#include "guidec/objectives.hpp"

namespace guidec {

struct AscentConfig {
  double step = 0.5;
  int max_iterations = 10000;
  int restarts = 3;
  double tolerance = 1e-10;
  double interior_floor = 1e-12;
};

struct SimplexProblem {
  std::size_t dimension = 0;
  std::function<double(std::span<const double>)> objective;
  std::function<std::vector<double>(std::span<const double>)> gradient;
  AscentConfig config;

  static SimplexProblem from(Objective objective, AscentConfig config = {});
};

struct OracleResult {
  TokenDist argmax = TokenDist::uniform(1);
  double value = 0.0;
  bool converged = false;  // false means DidNotConverge; argmax is still the best iterate
  int iterations = 0;      // of the winning start
  int best_start = 0;      // 0 is the uniform start
};

// Mirror ascent pi <- pi * exp(step * grad J(pi)) / Z from uniform plus
// `restarts` random interior points; returns the start with the best J
// (ties to the earlier start).
OracleResult maximize_exponentiated_gradient(const SimplexProblem& problem, std::uint64_t seed);

// Exhaustive scan of the simplex lattice with the given spacing (n = 2 or 3).
OracleResult maximize_grid(const SimplexProblem& problem, double step);

// Largest per-component discrepancy between the analytic gradient and a
// central difference (h), both projected onto the simplex tangent space,
// relative to max(|analytic|, 1). Requires min(point) >= 1e-4.
double gradient_check(const SimplexProblem& problem, const TokenDist& point, double h = 1e-6);

struct SelfReferentialResult {
  TokenDist policy = TokenDist::uniform(1);
  TokenDist stripped_policy = TokenDist::uniform(1);
  int rounds = 0;
  bool converged = false;
};

// Alternating scheme for lambda * KL(pi(.|s) || pi(.|s-)) - KL(pi || P_G):
// pi(.|s-) is held fixed while pi is maximized, then re-derived by tilting
// P_G(.|s-) with pi / P_G(.|s).
SelfReferentialResult solve_self_referential(const TokenDist& p_cond, const TokenDist& p_uncond,
                                             double lambda, AscentConfig config = {},
                                             std::uint64_t seed = 0, int max_rounds = 50,
                                             double tolerance = 1e-8);

}  // namespace guidec

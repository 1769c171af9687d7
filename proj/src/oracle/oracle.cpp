#include "guidec/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <memory>
#include <numeric>

#include "guidec/infotheory.hpp"
#include "guidec/rng.hpp"

namespace guidec {

namespace {

struct AscentRun {
  TokenDist pi;
  double value;
  bool converged;
  int iterations;
};

AscentRun ascend(const SimplexProblem& problem, const TokenDist& start) {
  const auto& cfg = problem.config;
  const std::size_t n = problem.dimension;
  TokenDist pi = start;
  std::vector<double> clipped(n);
  std::vector<double> next_log(n);
  bool converged = false;
  int k = 0;
  while (k < cfg.max_iterations) {
    ++k;
    for (std::size_t i = 0; i < n; ++i) clipped[i] = std::max(pi.prob(i), cfg.interior_floor);
    const auto grad = problem.gradient(clipped);
    for (std::size_t i = 0; i < n; ++i) next_log[i] = pi.log_prob(i) + cfg.step * grad[i];
    TokenDist next = log_normalize(next_log);
    const double delta = linf_distance(next, pi);
    pi = std::move(next);
    if (delta <= cfg.tolerance) {
      converged = true;
      break;
    }
  }
  const double value = problem.objective(pi.probs());
  return {std::move(pi), value, converged, k};
}

TokenDist random_interior(CounterRng rng, std::size_t n) {
  std::vector<double> w(n);
  for (auto& x : w) x = -std::log1p(-rng.uniform()) + 1e-3;  // Exp(1), kept off the boundary
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<double> logs(n);
  for (std::size_t i = 0; i < n; ++i) logs[i] = std::log(w[i] / total);
  return log_normalize(logs);
}

void check_problem(const SimplexProblem& problem) {
  if (problem.dimension < 2) throw Error(ErrorCode::InvalidArgument, "simplex dimension must be >= 2");
  if (!problem.objective || !problem.gradient) {
    throw Error(ErrorCode::InvalidArgument, "simplex problem lacks an objective or gradient");
  }
}

}  // namespace

SimplexProblem SimplexProblem::from(Objective objective, AscentConfig config) {
  auto shared = std::make_shared<const Objective>(std::move(objective));
  SimplexProblem p;
  p.dimension = shared->dimension();
  p.objective = [shared](std::span<const double> pi) { return shared->value(pi); };
  p.gradient = [shared](std::span<const double> pi) { return shared->gradient(pi); };
  p.config = config;
  return p;
}

OracleResult maximize_exponentiated_gradient(const SimplexProblem& problem, std::uint64_t seed) {
  check_problem(problem);
  const CounterRng root(seed);
  OracleResult best;
  bool have = false;
  for (int r = 0; r <= problem.config.restarts; ++r) {
    const TokenDist start = r == 0 ? TokenDist::uniform(problem.dimension)
                                   : random_interior(root.split(static_cast<std::uint64_t>(r)),
                                                     problem.dimension);
    AscentRun run = ascend(problem, start);
    if (!have || run.value > best.value) {
      best = OracleResult{std::move(run.pi), run.value, run.converged, run.iterations, r};
      have = true;
    }
  }
  return best;
}

OracleResult maximize_grid(const SimplexProblem& problem, double step) {
  check_problem(problem);
  const std::size_t n = problem.dimension;
  if (n > 3) throw Error(ErrorCode::DimensionTooLarge, "grid search supports n = 2 or 3");
  if (!(step > 0.0) || step > 1e-2) {
    throw Error(ErrorCode::InvalidArgument, "grid step must be in (0, 1e-2]");
  }
  const long m = std::lround(1.0 / step);
  const double md = static_cast<double>(m);
  std::vector<double> point(n);
  std::vector<double> best_point;
  double best_value = -std::numeric_limits<double>::infinity();
  auto consider = [&] {
    const double v = problem.objective(point);
    if (v > best_value) {
      best_value = v;
      best_point = point;
    }
  };
  for (long i = 0; i <= m; ++i) {
    point[0] = static_cast<double>(i) / md;
    if (n == 2) {
      point[1] = static_cast<double>(m - i) / md;
      consider();
      continue;
    }
    for (long j = 0; i + j <= m; ++j) {
      point[1] = static_cast<double>(j) / md;
      point[2] = static_cast<double>(m - i - j) / md;
      consider();
    }
  }
  return OracleResult{TokenDist::from_probs(best_point), best_value, true, 0, 0};
}

double gradient_check(const SimplexProblem& problem, const TokenDist& point, double h) {
  check_problem(problem);
  if (point.size() != problem.dimension) {
    throw Error(ErrorCode::DimensionMismatch, "point dimension differs from the problem");
  }
  for (double p : point.probs()) {
    if (p < 1e-4) throw Error(ErrorCode::PointTooCloseToBoundary, "min probability below 1e-4");
  }
  const std::size_t n = problem.dimension;
  std::vector<double> x(point.probs().begin(), point.probs().end());
  std::vector<double> analytic = problem.gradient(x);
  std::vector<double> numeric(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = problem.objective(x);
    x[i] = saved - h;
    const double down = problem.objective(x);
    x[i] = saved;
    numeric[i] = (up - down) / (2.0 * h);
  }
  auto project = [n](std::vector<double>& g) {
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(n);
    for (auto& v : g) v -= mean;
  };
  project(analytic);
  project(numeric);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double rel = std::abs(analytic[i] - numeric[i]) / std::max(std::abs(analytic[i]), 1.0);
    worst = std::max(worst, rel);
  }
  return worst;
}

SelfReferentialResult solve_self_referential(const TokenDist& p_cond, const TokenDist& p_uncond,
                                             double lambda, AscentConfig config,
                                             std::uint64_t seed, int max_rounds,
                                             double tolerance) {
  if (p_cond.size() != p_uncond.size()) {
    throw Error(ErrorCode::DimensionMismatch, "conditional and unconditional sizes differ");
  }
  if (!(lambda >= 0.0)) throw Error(ErrorCode::NegativeLambda, "lambda must be >= 0");
  const std::size_t n = p_cond.size();
  SelfReferentialResult out{p_cond, p_uncond, 0, false};
  std::optional<TokenDist> previous;
  for (int round = 1; round <= max_rounds; ++round) {
    auto problem =
        SimplexProblem::from(self_referential_objective(p_cond, out.stripped_policy, lambda), config);
    TokenDist pi = maximize_exponentiated_gradient(problem, seed + static_cast<std::uint64_t>(round)).argmax;
    std::vector<double> tilted(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double log_pi = std::log(std::max(pi.prob(i), config.interior_floor));
      tilted[i] = p_uncond.log_prob(i) + log_pi - p_cond.log_prob(i);
    }
    TokenDist stripped = log_normalize(tilted);
    const bool settled = previous && linf_distance(pi, *previous) <= tolerance &&
                         linf_distance(stripped, out.stripped_policy) <= tolerance;
    out.policy = pi;
    out.stripped_policy = std::move(stripped);
    out.rounds = round;
    previous = std::move(pi);
    if (settled) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace guidec

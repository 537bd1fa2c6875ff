#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace optswitch {

using ObjectiveFn = std::function<double(std::span<const double>)>;

struct SimplexConfig {
  double rho = 1.0;    // reflection
  double chi = 2.0;    // expansion
  double gamma = 0.5;  // contraction
  double sigma = 0.5;  // shrink
  int max_iters = 0;      // 0: 200 * m
  int max_fn_evals = 0;   // 0: 200 * m
  double x_tol = 1e-6;
  double f_tol = 1e-6;
  int restarts = 20;
  int polish = 3;                  // extra runs from the winner while they still improve
  double restart_spread = 0.05;    // relative initial simplex size
  double zero_spread = 0.00025;    // absolute size for zero coordinates
  std::uint64_t rng_seed = 0;
  int threads = 0;                 // 0: hardware concurrency
  /// Values at or above this are "no feasible point found".
  double sentinel = std::numeric_limits<double>::infinity();

  bool valid() const { return rho > 0 && chi > 1 && gamma > 0 && gamma < 1 && sigma > 0 && sigma < 1; }
};

struct OptimizationResult {
  std::vector<double> best_point;
  double best_value = std::numeric_limits<double>::infinity();
  long evals = 0;
  long iterations = 0;
  bool converged = false;
  int restart_index = 0;
  std::vector<double> best_trace; // best value after each iteration
};

OptimizationResult nelder_mead(const ObjectiveFn& f, std::span<const double> x0, const SimplexConfig& cfg);

struct Bounds {
  std::vector<double> lo, hi;
  std::size_t dim() const { return lo.size(); }
};

/// cfg.restarts runs from seeded uniform draws in `bounds` (the first
/// `starts.size()` runs use the given points instead). The simplex works in
/// coordinates scaled to the box. Best value wins, lowest index on ties.
OptimizationResult multi_start_minimize(const ObjectiveFn& f, const Bounds& bounds, const SimplexConfig& cfg,
                                        const std::vector<std::vector<double>>& starts = {});

/// Run body(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

} // namespace optswitch

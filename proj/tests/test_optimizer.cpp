#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "optswitch/optimizer.hpp"

using namespace optswitch;

namespace {
double rosen(std::span<const double> x) {
  const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
  return a * a + 100.0 * b * b;
}

// determinant by Gaussian elimination, small m only
double det(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  double d = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[p][c])) p = r;
    if (a[p][c] == 0.0) return 0.0;
    if (p != c) {
      std::swap(a[p], a[c]);
      d = -d;
    }
    d *= a[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return d;
}
} // namespace

TEST_CASE("quadratic in one dimension") {
  const ObjectiveFn f = [](std::span<const double> x) { return (x[0] - 2.0) * (x[0] - 2.0); };
  const double x0[] = {10.0};
  SimplexConfig cfg;
  cfg.x_tol = 1e-8;
  cfg.f_tol = 1e-14;
  auto r = nelder_mead(f, x0, cfg);
  CHECK(std::fabs(r.best_point[0] - 2.0) < 1e-6);
  CHECK(r.converged);
}

TEST_CASE("Rosenbrock from the classic start") {
  const double x0[] = {-1.2, 1.0};
  SimplexConfig cfg;
  cfg.max_fn_evals = 10000;
  cfg.max_iters = 10000;
  cfg.x_tol = 1e-10;
  cfg.f_tol = 1e-12;
  auto r = nelder_mead(rosen, x0, cfg);
  CHECK(r.best_value < 1e-6);
  CHECK(r.evals <= 10000);
  CHECK(std::fabs(r.best_point[0] - 1.0) < 1e-2);
}

TEST_CASE("constant function converges immediately") {
  const ObjectiveFn f = [](std::span<const double>) { return 3.5; };
  const double x0[] = {1.0, 2.0, 3.0};
  auto r = nelder_mead(f, x0, {});
  CHECK(r.converged);
  CHECK(r.best_value == 3.5);
  CHECK(r.iterations == 0);
  CHECK(r.evals == 5); // vertices plus one centroid probe
}

TEST_CASE("best value never increases") {
  const double x0[] = {-1.2, 1.0};
  auto r = nelder_mead(rosen, x0, {});
  for (std::size_t i = 1; i < r.best_trace.size(); ++i) CHECK(r.best_trace[i] <= r.best_trace[i - 1]);
}

TEST_CASE("initial simplex is non-degenerate") {
  std::vector<std::vector<double>> seen;
  const ObjectiveFn f = [&](std::span<const double> x) {
    seen.emplace_back(x.begin(), x.end());
    return x[0] + x[1] + x[2];
  };
  const double x0[] = {2.0, 0.0, -4.0};
  SimplexConfig cfg;
  cfg.max_fn_evals = 4;
  nelder_mead(f, x0, cfg);
  REQUIRE(seen.size() >= 4);
  CHECK(seen[1][0] == doctest::Approx(2.1));
  CHECK(seen[2][1] == doctest::Approx(0.00025));
  CHECK(seen[3][2] == doctest::Approx(-4.2));
  std::vector<std::vector<double>> edges;
  for (int i = 1; i <= 3; ++i) {
    std::vector<double> e(3);
    for (int k = 0; k < 3; ++k) e[k] = seen[i][k] - seen[0][k];
    edges.push_back(e);
  }
  CHECK(std::fabs(det(edges)) > 0.0);
}

TEST_CASE("budget exhaustion clears converged") {
  const double x0[] = {-1.2, 1.0};
  SimplexConfig cfg;
  cfg.max_fn_evals = 20;
  auto r = nelder_mead(rosen, x0, cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.evals <= 20 + 3); // a shrink may finish its round
}

TEST_CASE("invalid coefficients are rejected") {
  SimplexConfig cfg;
  cfg.gamma = 1.5;
  const double x0[] = {0.0};
  CHECK_THROWS_AS(nelder_mead(rosen, x0, cfg), std::invalid_argument);
  CHECK_THROWS_AS(nelder_mead(rosen, std::span<const double>{}, SimplexConfig{}), std::invalid_argument);
}

TEST_CASE("multi-start is deterministic") {
  Bounds b{{-2, -2}, {2, 2}};
  SimplexConfig cfg;
  cfg.restarts = 6;
  cfg.rng_seed = 99;
  std::vector<double> log1, log2;
  cfg.threads = 1;
  auto r1 = multi_start_minimize(rosen, b, cfg);
  auto r2 = multi_start_minimize(rosen, b, cfg);
  cfg.threads = 3;
  auto r3 = multi_start_minimize(rosen, b, cfg);
  CHECK(r1.best_value == r2.best_value);
  CHECK(r1.best_point == r2.best_point);
  CHECK(r1.best_value == r3.best_value);
  CHECK(r1.best_point == r3.best_point);
  CHECK(r1.restart_index == r3.restart_index);
  CHECK(r1.best_value < 1e-6);
  cfg.rng_seed = 100;
  auto r4 = multi_start_minimize(rosen, b, cfg);
  CHECK(r4.evals != r1.evals);
}

TEST_CASE("plateau start reports no convergence") {
  const double sentinel = 2000.0;
  const ObjectiveFn f = [&](std::span<const double> x) { return x[0] > 5.0 ? (x[0] - 6) * (x[0] - 6) : sentinel; };
  Bounds b{{0.0}, {1.0}};
  SimplexConfig cfg;
  cfg.restarts = 1;
  cfg.sentinel = sentinel;
  auto r = multi_start_minimize(f, b, cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.best_value == sentinel);
}

TEST_CASE("ties go to the lowest restart") {
  const ObjectiveFn f = [](std::span<const double>) { return 1.0; };
  Bounds b{{0.0}, {1.0}};
  SimplexConfig cfg;
  cfg.restarts = 5;
  cfg.threads = 2;
  auto r = multi_start_minimize(f, b, cfg);
  CHECK(r.restart_index == 0);
}

TEST_CASE("given starts are used first") {
  const ObjectiveFn f = [](std::span<const double> x) { return (x[0] - 0.3) * (x[0] - 0.3); };
  Bounds b{{0.0}, {10.0}};
  SimplexConfig cfg;
  cfg.restarts = 1;
  cfg.x_tol = 1e-9;
  cfg.f_tol = 1e-14;
  auto r = multi_start_minimize(f, b, cfg, {{0.25}});
  CHECK(std::fabs(r.best_point[0] - 0.3) < 1e-4);
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}

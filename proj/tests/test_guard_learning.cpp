#include <doctest.h>

#include <cmath>
#include <random>

#include "optswitch/guard_learning.hpp"
#include "optswitch/run_config.hpp"
#include "optswitch/systems.hpp"

using namespace optswitch;

TEST_CASE("PAC sample size") {
  CHECK(pac_sample_size({0.1, 0.05, 2, 2.0}) == 1686);
  CHECK(pac_sample_size({0.5, 0.5, 0, 2.0}) == 76);
  for (int n = 0; n < 4; ++n) {
    const long a = pac_sample_size({0.2, 0.1, n, 2.0});
    const long b = pac_sample_size({0.1, 0.1, n, 2.0});
    CHECK(b >= 2 * a - 1); // ceilings can cost one
  }
  // natural log option gives a smaller bound
  CHECK(pac_sample_size({0.1, 0.05, 2, std::exp(1.0)}) < 1686);
}

TEST_CASE("perceptron on a separable pair") {
  LabeledSample s;
  s.points = {{{1.0}, 1}, {{-1.0}, -1}};
  auto r = perceptron_learn(s, 100);
  CHECK(training_errors(r.guard, s) == 0);
  CHECK(r.guard.contains(std::vector<double>{1.0}));
  CHECK_FALSE(r.guard.contains(std::vector<double>{-1.0}));
}

TEST_CASE("perceptron threshold on thermostat-like data") {
  // HEAT -> OFF: positives at the switch temperature, negatives on the way up
  LabeledSample s;
  for (int i = 0; i < 5; ++i) s.points.push_back({{20.2 + 0.001 * i, 16.0}, 1});
  for (int i = 1; i <= 10; ++i) s.points.push_back({{20.2 - 0.02 * i, 16.0}, -1});
  auto r = perceptron_learn(s, 10000);
  CHECK(training_errors(r.guard, s) == 0);
  // held-out points on either side
  CHECK(r.guard.contains(std::vector<double>{20.26, 16.0}));
  CHECK_FALSE(r.guard.contains(std::vector<double>{20.14, 16.0}));
}

TEST_CASE("XOR is not separable") {
  LabeledSample s;
  s.points = {{{0, 0}, 1}, {{1, 1}, 1}, {{0, 1}, -1}, {{1, 0}, -1}};
  try {
    perceptron_learn(s, 100);
    FAIL("expected non-separable");
  } catch (const NonSeparableError& e) {
    CHECK(e.misclassified >= 1);
    CHECK(training_errors(e.pocket, s) == e.misclassified);
  }
}

TEST_CASE("perceptron needs both labels") {
  LabeledSample s;
  s.points = {{{1.0}, 1}};
  CHECK_THROWS_AS(perceptron_learn(s, 10), std::invalid_argument);
}

TEST_CASE("mistake bound with a planted halfspace") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int used = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 5;
    std::vector<double> w(n + 1);
    double norm = 0;
    for (auto& v : w) {
      v = g(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : w) v /= norm;
    LabeledSample s;
    double gamma = 1e300, R = 0;
    while (s.points.size() < 40) {
      std::vector<double> x(n);
      for (auto& v : x) v = u(rng);
      double m = w[n];
      for (int i = 0; i < n; ++i) m += w[i] * x[i];
      if (std::fabs(m) < 0.05) continue; // keep a margin
      double r2 = 1.0;                    // augmented coordinate
      for (double v : x) r2 += v * v;
      R = std::max(R, std::sqrt(r2));
      gamma = std::min(gamma, std::fabs(m));
      s.points.push_back({x, m > 0 ? 1 : -1});
    }
    if (s.positives() == 0 || s.negatives() == 0) continue; // plane misses the box
    ++used;
    auto r = perceptron_learn(s, 100000, false);
    CHECK(training_errors(r.guard, s) == 0);
    CHECK(static_cast<double>(r.updates) <= (R / gamma) * (R / gamma) + 1.0);
  }
  CHECK(used >= 20);
}

TEST_CASE("normalization does not change the classifier's sign") {
  LabeledSample s;
  for (int i = 0; i < 20; ++i) {
    const double a = 1e-6 * i, b = 1e3 * (i % 7);
    s.points.push_back({{a, b}, a > 1e-5 ? 1 : -1});
  }
  auto r = perceptron_learn(s, 100000, true);
  CHECK(training_errors(r.guard, s) == 0);
}

TEST_CASE("initial state selection") {
  auto sys = load_named("thermostat").bundle.system;
  SynthesisOptions o;
  auto all = select_initial_states(sys, o, 1000);
  CHECK(all.size() == 202);
  o.max_inits = 40;
  auto cap = select_initial_states(sys, o, 1000);
  CHECK(cap.size() == 40);
  int lo = 0, hi = 0;
  for (auto& s : cap) (s.x[1] == 16.0 ? lo : hi)++;
  CHECK(lo == 20);
  CHECK(hi == 20);
  // fewer PAC samples than the finite set: a seeded subset
  o.max_inits = 0;
  o.seed = 3;
  auto sub = select_initial_states(sys, o, 50);
  CHECK(sub.size() == 50);
  auto sub2 = select_initial_states(sys, o, 50);
  for (std::size_t i = 0; i < sub.size(); ++i) CHECK(sub[i].x == sub2[i].x);
}

TEST_CASE("single initial state synthesis reproduces its optimum") {
  auto ns = load_named("thermostat");
  auto& b = ns.bundle;
  b.system.init = {};
  b.system.init.states.push_back({0, {22.0, 16.0}});
  // narrow the over-approximation to test clipping
  b.system.guard_over[1][0] = parse_region("temp >= 19", b.system.variable_names());
  b.settings.set("restarts", 8);
  auto obj = objective_config(b.settings);
  auto sx = simplex_config(b.settings, 1);
  auto so = synthesis_options(b.system, b.settings, 1);
  auto res = synthesize_logic(b.system, b.metric, obj, sx, so);
  REQUIRE(res.inits.size() == 1);
  REQUIRE(res.inits[0].feasible);
  CHECK(res.failures.empty());
  REQUIRE(res.guards.size() == 2);
  for (const auto& g : res.guards) {
    CHECK(g.separable);
    CHECK(g.training_error == 0);
    CHECK(g.partition == std::vector<double>{16.0});
  }

  // guarded run lands on the optimal switch states
  SimOptions sim = obj.sim;
  auto run = simulate_guarded(b.system, b.metric, res.logic, {0, {22.0, 16.0}}, 30.0, sim);
  REQUIRE(run.trajectory.switches.size() > 4);
  const auto& ex = res.inits[0].extraction;
  for (const auto& e : run.trajectory.switches) {
    bool matched = false;
    for (const auto& sw : ex.switches)
      if (sw.in_cycle && sw.from == e.from && sw.to == e.to && std::fabs(sw.x[0] - e.x[0]) < 0.05) matched = true;
    INFO("switch " << e.from << "->" << e.to << " at " << e.x[0]);
    CHECK(matched);
  }

  // every guard inside its over-approximation
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> t(0.0, 40.0);
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> x{t(rng), k % 2 ? 16.0 : 26.0};
    for (int q = 0; q < 3; ++q)
      for (int r = 0; r < 3; ++r)
        if (res.logic.guard(q, r).contains(x)) CHECK(b.system.over(q, r).contains(x));
  }

  // report round trip
  auto rep = synthesis_report(b.system, res, so);
  CHECK(rep["pac"]["sample_size"] == res.pac_size);
  CHECK(rep["pac"]["failure_probability_bound"].get<double>() == doctest::Approx(std::min(1.0, 2 * so.pac.epsilon)));
  auto logic = logic_from_report(b.system, rep);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> x{t(rng), 16.0};
    for (int q = 0; q < 3; ++q)
      for (int r = 0; r < 3; ++r) CHECK(logic.guard(q, r).contains(x) == res.logic.guard(q, r).contains(x));
  }
}

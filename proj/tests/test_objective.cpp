#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "optswitch/objective.hpp"
#include "optswitch/optimizer.hpp"
#include "optswitch/run_config.hpp"
#include "optswitch/systems.hpp"

using namespace optswitch;

TEST_CASE("supersequence") {
  CHECK(supersequence(3, 2) == std::vector<int>{0, 1, 2, 0, 1, 2, 0});
  CHECK(supersequence(2, 1) == std::vector<int>{0, 1, 0});
  CHECK(supersequence(3, 1, 1) == std::vector<int>{1, 2, 0, 1});
  CHECK(supersequence(4, 0) == std::vector<int>{0});
}

TEST_CASE("schedule parameters") {
  const double p[] = {1.0, -2.0, 0.5, 3.0, 1.5};
  auto s = schedule_from_params(p);
  CHECK(s.raw_times == std::vector<double>{1.0, 1.0, 1.5});
  CHECK(s.tp == 3.0);
  CHECK(s.tP == 4.5);
  auto back = params_from_schedule(s);
  CHECK(back == std::vector<double>{1.0, 0.0, 0.5, 3.0, 1.5});
}

TEST_CASE("hybrid distance") {
  auto sys = load_named("thermostat").bundle.system;
  HybridState a{0, {20.02, 16.0}}, b{0, {20.2, 16.0}}, c{1, {20.2, 16.0}};
  CHECK(hybrid_distance(sys, a, a, 2000) == 0.0);
  CHECK(hybrid_distance(sys, a, b, 2000) == doctest::Approx(0.0324));
  CHECK(hybrid_distance(sys, b, c, 2000) == 2000.0);

  auto oil = load_named("oil-pump-cost1").bundle.system;
  const double tau = 6.283185307179586;
  HybridState p{0, {4.0, 0.1}}, q{0, {4.0, 0.1 + 3 * tau}}, r{0, {4.0, tau - 0.1}};
  CHECK(hybrid_distance(oil, p, q, 2000) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(hybrid_distance(oil, p, r, 2000) == doctest::Approx(0.04));

  auto bb = load_named("buck-boost").bundle.system; // clock left out
  HybridState u{0, {1.0, 5.0, 0.0}}, v{0, {1.0, 5.0, 3e-4}};
  CHECK(hybrid_distance(bb, u, v, 2000) == 0.0);
}

TEST_CASE("NZ reduction") {
  const std::vector<int> base{0, 1, 2, 0, 1, 2, 0};
  DwellSchedule s{{5, 6, 6, 11, 12, 12}, 6.5, 12.5};
  auto r = nz_reduce(base, s, 1e-4);
  CHECK(r.modes == std::vector<int>{0, 1, 0, 1, 0});
  CHECK(r.times == std::vector<double>{5, 6, 11, 12});
  CHECK(r.tp == 6.5);
  CHECK(r.tP == 12.5);

  DwellSchedule plain{{1, 2, 3, 4, 5, 6}, 0.5, 7};
  auto id = nz_reduce(base, plain, 1e-4);
  CHECK(id.modes == base);
  CHECK(id.times == plain.raw_times);

  DwellSchedule zero{{0, 0, 0, 0, 0, 0}, 0, 0};
  CHECK_THROWS_AS(nz_reduce(base, zero, 1e-4), DegenerateScheduleError);

  // times past tP are clamped, so the tail modes vanish
  DwellSchedule tail{{1, 2, 30, 40, 50, 60}, 0.5, 3};
  auto t = nz_reduce(base, tail, 1e-4);
  CHECK(t.modes == std::vector<int>{0, 1, 2});
  CHECK(t.times == std::vector<double>{1, 2});
}

TEST_CASE("NZ is idempotent") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int N = 2 + static_cast<int>(rng() % 3), k = 1 + static_cast<int>(rng() % 3);
    auto base = supersequence(N, k);
    std::vector<double> p(base.size() + 1);
    for (auto& v : p) v = std::uniform_real_distribution<double>(-1.0, 2.0)(rng);
    auto s = schedule_from_params(p);
    ReducedSchedule r1;
    try {
      r1 = nz_reduce(base, s, 0.1);
    } catch (const DegenerateScheduleError&) {
      continue;
    }
    auto r2 = nz_reduce(r1.modes, DwellSchedule{r1.times, r1.tp, r1.tP}, 0.1);
    CHECK(r2.modes == r1.modes);
    CHECK(r2.times == r1.times);
  }
}

TEST_CASE("F at the published thermostat schedule") {
  auto ns = load_named("thermostat");
  auto& b = ns.bundle;
  auto cfg = objective_config(b.settings);
  HybridState init{0, {22.0, 16.0}};
  const auto base = supersequence(3, 2);
  DwellSchedule s{{5.08, 5.32, 5.32, 6.97, 7.23, 7.23}, 4.87, 8.66};
  auto ev = evaluate_F_detailed(b.system, b.metric, init, base, s, cfg);
  REQUIRE(ev.feasible);
  CHECK(std::isfinite(ev.F));
  CHECK(ev.F < cfg.sentinel);
  CHECK(ev.reduced.modes == std::vector<int>{0, 1, 0, 1, 0});
  CHECK(ev.F == doctest::Approx(ev.cost + cfg.M * ev.distance));

  // polishing from there drives the recurrence term down
  SimplexConfig sc;
  const ObjectiveFn F = [&](std::span<const double> p) {
    return evaluate_F(b.system, b.metric, init, base, schedule_from_params(p), cfg);
  };
  auto x0 = params_from_schedule(s);
  auto res = nelder_mead(F, x0, sc);
  for (int again = 0; again < 3; ++again) res = nelder_mead(F, res.best_point, sc);
  auto best = evaluate_F_detailed(b.system, b.metric, init, base, schedule_from_params(res.best_point), cfg);
  REQUIRE(best.feasible);
  CHECK(best.distance < 0.1 * ev.distance);
  CHECK(cfg.M * best.distance < 5e-3);
  CHECK(best.F <= ev.F);
}

TEST_CASE("infeasible schedules give exactly the sentinel") {
  auto ns = load_named("thermostat");
  auto& b = ns.bundle;
  auto cfg = objective_config(b.settings);
  HybridState init{0, {22.0, 16.0}};
  const auto base = supersequence(3, 2);
  DwellSchedule unordered{{5.32, 5.08, 5.32, 6.97, 7.23, 7.23}, 4.87, 8.66};
  CHECK(evaluate_F(b.system, b.metric, init, base, unordered, cfg) == cfg.sentinel);
  DwellSchedule zero{{0, 0, 0, 0, 0, 0}, 0, 0};
  auto ev = evaluate_F_detailed(b.system, b.metric, init, base, zero, cfg);
  CHECK(ev.F == cfg.sentinel);
  CHECK_FALSE(ev.feasible);
  DwellSchedule backwards{{1, 2, 3, 4, 5, 6}, 5, 4};
  CHECK(evaluate_F(b.system, b.metric, init, base, backwards, cfg) == cfg.sentinel);
  DwellSchedule nan{{1, std::nan(""), 3, 4, 5, 6}, 1, 4};
  CHECK(evaluate_F(b.system, b.metric, init, base, nan, cfg) == cfg.sentinel);
}

TEST_CASE("switch outside the over-approximation is infeasible") {
  auto ns = load_named("buck-boost");
  auto& b = ns.bundle;
  auto cfg = objective_config(b.settings);
  cfg.snap_equalities = false;
  HybridState init{0, {0.0, 5.0, 0.0}};
  const auto base = supersequence(3, 1);
  // TRANSFER -> IDLE while the inductor still carries current
  DwellSchedule s{{1e-5, 1.2e-5, 5e-5}, 0.0, 8e-5};
  auto ev = evaluate_F_detailed(b.system, b.metric, init, base, s, cfg);
  CHECK(ev.F == cfg.sentinel);
  CHECK_FALSE(ev.feasible);
}

TEST_CASE("recurrence penalty grows with the mismatch") {
  auto ns = load_named("thermostat");
  auto& b = ns.bundle;
  auto cfg = objective_config(b.settings);
  cfg.sentinel = 1e12;
  HybridState init{0, {22.0, 16.0}};
  const auto base = supersequence(3, 2);
  double last = -1;
  for (double tP : {8.66, 8.9, 9.2, 9.6}) {
    DwellSchedule s{{5.08, 5.32, 5.32, 6.97, 7.23, 7.23}, 4.87, tP};
    auto ev = evaluate_F_detailed(b.system, b.metric, init, base, s, cfg);
    REQUIRE(ev.feasible);
    CHECK(ev.F - ev.cost == doctest::Approx(cfg.M * ev.distance));
    CHECK(ev.distance > last);
    last = ev.distance;
  }
}

TEST_CASE("extraction from a good schedule") {
  auto ns = load_named("thermostat");
  auto& b = ns.bundle;
  auto cfg = objective_config(b.settings);
  HybridState init{0, {22.0, 16.0}};
  const auto base = supersequence(3, 2);
  DwellSchedule s{{5.08, 5.32, 5.32, 6.97, 7.23, 7.23}, 4.87, 8.66};
  auto ex = extract_switching_states(b.system, b.metric, init, base, s, cfg);
  CHECK(ex.cycle == std::vector<int>{1, 0});
  bool fh = false, hf = false;
  for (const auto& sw : ex.switches) {
    if (sw.from == 0 && sw.to == 1) {
      fh = true;
      CHECK(std::fabs(sw.x[0] - 19.6) < 0.15);
    }
    if (sw.from == 1 && sw.to == 0) {
      hf = true;
      CHECK(std::fabs(sw.x[0] - 20.2) < 0.15);
    }
  }
  CHECK(fh);
  CHECK(hf);

  DwellSchedule none{{10, 10, 10, 10, 10, 10}, 1, 5};
  auto ex0 = extract_switching_states(b.system, b.metric, HybridState{0, {16.0, 16.0}}, base, none, cfg);
  CHECK(ex0.switches.empty());
  CHECK(ex0.cycle == std::vector<int>{0});

  DwellSchedule bad{{1, 0.5, 2, 3, 4, 5}, 1, 5};
  CHECK_THROWS(extract_switching_states(b.system, b.metric, init, base, bad, cfg));
}

TEST_CASE("short windows are rejected when min_window is set") {
  auto ns = load_named("thermostat");
  auto& b = ns.bundle;
  auto cfg = objective_config(b.settings);
  REQUIRE(cfg.min_window > 0);
  HybridState init{0, {22.0, 16.0}};
  const auto base = supersequence(3, 2);
  DwellSchedule s{{9, 9, 9, 9, 9, 9}, 1.0, 1.0 + 0.5 * cfg.min_window};
  CHECK(evaluate_F(b.system, b.metric, init, base, s, cfg) == cfg.sentinel);
  cfg.min_window = 0;
  CHECK(evaluate_F(b.system, b.metric, init, base, s, cfg) < cfg.sentinel);
}

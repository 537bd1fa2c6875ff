#include <doctest.h>

#include <cmath>
#include <random>

#include "optswitch/config_format.hpp"
#include "optswitch/systems.hpp"

using namespace optswitch;

TEST_CASE("ids") {
  auto ids = named_system_ids();
  CHECK(ids.size() == 5);
  for (const auto& id : ids) CHECK(load_named(id).id == id);
}

TEST_CASE("thermostat OFF decays toward the outside temperature") {
  auto sys = load_named("thermostat").bundle.system;
  std::vector<double> dx(2);
  for (double temp = 16.5; temp < 40; temp += 1.3) {
    std::vector<double> x{temp, 16.0};
    sys.derivative(0, 0.0, x, dx);
    CHECK(dx[0] < 0.0);
  }
  std::vector<double> x{22.0, 16.0};
  sys.derivative(1, 0.0, x, dx);
  CHECK(dx[0] == doctest::Approx(-0.6 + 2.9));
  sys.derivative(2, 0.0, x, dx);
  CHECK(dx[0] == doctest::Approx(-0.6 - 3.3));
}

TEST_CASE("thermostat metric") {
  auto b = load_named("thermostat").bundle;
  std::vector<double> x{22.0, 16.0}, d(4);
  b.metric.flow(0, 0.0, x, d);
  CHECK(d[0] == 4.0);
  CHECK(d[1] == 0.0);
  b.metric.flow(1, 0.0, x, d);
  CHECK(d[1] == 36.0);
  CHECK(b.metric.weights == std::vector<double>{10, 1, 1});
  CHECK(load_named("thermostat-equal-weight").bundle.metric.weights == std::vector<double>{1, 1, 1});
  std::vector<double> pr{0, 0, 0, 0};
  b.metric.apply_update(0, 2, 1.0, x, pr);
  CHECK(pr[2] == 0.5);
}

TEST_CASE("oil pump") {
  auto b = load_named("oil-pump-cost2").bundle;
  std::vector<double> x{4.0, 0.0}, dx(2), d(4);
  b.system.derivative(0, 0.0, x, dx);
  CHECK(dx[0] == doctest::Approx(-6.0));
  CHECK(dx[1] == 1.0);
  b.system.derivative(1, 0.0, x, dx);
  CHECK(dx[0] == doctest::Approx(-2.0));
  b.metric.flow(0, 0.0, x, d);
  CHECK(d[0] == 4.0);
  CHECK(d[2] == 0.0);
  CHECK(d[3] == 1.0);
  std::vector<double> hi{9.0, 0.0};
  b.metric.flow(0, 0.0, hi, d);
  CHECK(d[0] == 1e6);
  CHECK(d[2] == 1.0);
  CHECK(b.system.variables[1].role == VariableRole::Clock);
  CHECK(load_named("oil-pump-cost1").bundle.metric.size() == 2);
}

TEST_CASE("buck-boost") {
  auto b = load_named("buck-boost").bundle;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 5.0), ph(0.0, 2.4e-3);
  std::vector<double> dx(3);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> x{u(rng), u(rng) + 2.0, ph(rng)};
    b.system.derivative(2, 0.0, x, dx);
    CHECK(dx[0] == 0.0);
    CHECK(dx[2] == 1.0);
  }
  // charging from rest: E/L
  std::vector<double> rest{0.0, 5.0, 0.0};
  b.system.derivative(0, 0.0, rest, dx);
  CHECK(dx[0] == doctest::Approx(10.0 / 47e-6));
  CHECK(buck_boost_output(0.0, 5.0) == doctest::Approx(100.0 / 100.06 * 5.0));
  CHECK(buck_boost_output(7e-4, 5.0) == doctest::Approx(200.0 / 200.06 * 5.0));
  CHECK(buck_boost_output(1.3e-3, 5.0) == doctest::Approx(100.0 / 100.06 * 5.0));
  std::vector<double> flowing{1.0, 5.0, 0.0}, zero{0.0, 5.0, 0.0};
  CHECK_FALSE(b.system.over(1, 2).contains(flowing));
  CHECK(b.system.over(1, 2).contains(zero));
  CHECK(b.system.over(0, 1).is_full());
  CHECK_FALSE(b.system.variables[2].in_distance);
}

TEST_CASE("reference logic") {
  auto ns = load_named("thermostat");
  auto logic = ns.reference_logic();
  CHECK(logic.guard(1, 0).contains(std::vector<double>{20.3, 16.0}));
  CHECK_FALSE(logic.guard(1, 0).contains(std::vector<double>{20.3, 26.0}));
  CHECK(logic.guard(0, 2).contains(std::vector<double>{20.4, 26.0}));
  CHECK(logic.guard(1, 2).is_empty());
  auto bb = load_named("buck-boost").reference_logic();
  CHECK(bb.guard(0, 1).contains(std::vector<double>{2.0, 0.0, 0.0}));
  CHECK(bb.guard(2, 0).contains(std::vector<double>{0.0, 4.5, 0.0}));
}

TEST_CASE("every built-in exports to a parseable config") {
  for (const auto& id : named_system_ids()) {
    auto text = write_config(load_named(id).bundle);
    CHECK_NOTHROW(parse_config(text));
  }
}

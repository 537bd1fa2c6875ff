#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "optswitch/config_format.hpp"
#include "optswitch/model.hpp"

namespace testing_support {

// one state variable per entry of `rates`, mode m has xdot_i = rates[m][i];
// metric: p = integral of 2, r = integral of 1
inline optswitch::SystemBundle constant_rate_system(std::vector<std::vector<double>> rates) {
  using namespace optswitch;
  SystemBundle b;
  auto& s = b.system;
  s.name = "const";
  for (std::size_t m = 0; m < rates.size(); ++m) s.modes.push_back("M" + std::to_string(m));
  for (std::size_t i = 0; i < rates[0].size(); ++i) s.variables.push_back({"x" + std::to_string(i)});
  s.field = [rates](int mode, double, std::span<const double>, std::span<double> dx) {
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = rates[static_cast<std::size_t>(mode)][i];
  };
  for (auto& r : rates) {
    std::vector<std::string> row;
    for (double v : r) row.push_back(format_number(v));
    s.field_text.push_back(row);
  }
  s.init.states.push_back({0, std::vector<double>(rates[0].size(), 0.0)});
  s.default_guard_over();
  auto& m = b.metric;
  m.accumulators = {{"p", AccumulatorKind::Penalty}, {"r", AccumulatorKind::Reward}};
  m.penalty_vars = {0};
  m.reward_vars = {1};
  m.weights = {1};
  m.flow = [](int, double, std::span<const double>, std::span<double> d) {
    d[0] = 2.0;
    d[1] = 1.0;
  };
  m.flow_text.assign(rates.size(), {"2", "1"});
  return b;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

} // namespace testing_support

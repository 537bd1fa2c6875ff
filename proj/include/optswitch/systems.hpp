#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "optswitch/config_format.hpp"
#include "optswitch/simulator.hpp"

namespace optswitch {

/// Expected guard: `variable rel threshold` (within tolerance) for a switch,
/// optionally restricted to a parameter value such as out == 16.
struct ReferenceGuard {
  std::string from, to;
  std::string variable;
  Relation relation = Relation::GreaterEqual;
  double threshold = 0.0;
  double tolerance = 0.0;
  std::string condition_variable; // empty: unconditional
  double condition_value = 0.0;
};

struct NamedSystem {
  std::string id;
  SystemBundle bundle;  // system, metric and recommended settings
  std::vector<ReferenceGuard> reference_guards;

  /// Reference guards as executable logic.
  SwitchingLogic reference_logic() const;
};

std::vector<std::string> named_system_ids();
/// Throws std::invalid_argument for an unknown id.
NamedSystem load_named(std::string_view id);

/// Output voltage of the converter, R/(R + rC) * uC with the load R active at t.
double buck_boost_output(double t, double uC);

} // namespace optswitch

#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "optswitch/model.hpp"

namespace optswitch {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Free-form numeric knobs from the [settings] section (integration step,
/// objective weights, optimizer budgets, ...). Unknown keys are kept.
struct Settings {
  std::map<std::string, double, std::less<>> values;

  double get(std::string_view key, double fallback) const;
  bool has(std::string_view key) const { return values.find(key) != values.end(); }
  void set(std::string key, double v) { values[std::move(key)] = v; }
};

struct SystemBundle {
  MultimodalSystem system;
  PerformanceMetric metric;
  Settings settings;
};

/// Text format, one directive per line, `#` comments:
///
///   [system]       name = <id>
///   [modes]        OFF HEAT COOL
///   [variables]    temp state lo=-50 hi=150 | out parameter | t clock period=6.28 distance=no
///   [dynamics]     OFF.temp = -0.1*(temp - out)          (missing entries are 0)
///   [metric]       penalty fuel = (temp-out)^2 | reward time = 1 | HEAT.fuel = ...
///                  update * -> * swTear = swTear + 0.5
///   [init]         state OFF temp=22 out=16
///                  box OFF temp=grid(16,26,0.1) out={16,26} | temp=[16,26]
///   [guards-over]  A -> B : full | empty | iL == 0 && uC >= 1
///   [cost-weights] discomfort / time = 10
///   [settings]     step = 1e-3
SystemBundle parse_config(std::string_view text);
SystemBundle load_config_file(const std::string& path);
std::string write_config(const SystemBundle& bundle);

/// FNV-1a 64 over the canonical text, as 16 hex digits.
std::string config_hash(std::string_view text);

} // namespace optswitch

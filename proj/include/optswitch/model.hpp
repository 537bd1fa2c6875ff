#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "optswitch/expression.hpp"
#include "optswitch/region.hpp"

namespace optswitch {

/// State variables evolve under the mode's field. Parameters are constant
/// along a trajectory (an environment value like an outside temperature).
/// Clocks are time-like and periodic in everything that reads them, so their
/// distance is measured modulo `period`.
enum class VariableRole { State, Parameter, Clock };

struct Variable {
  std::string name;
  VariableRole role = VariableRole::State;
  double period = 0.0;      // clocks only
  bool in_distance = true;  // participates in the recurrence distance
  double lo = -1e3, hi = 1e3; // box the field must be finite on
};

struct HybridState {
  int mode = 0;
  std::vector<double> x;
};

/// dx = f(mode, t, x)
using FieldFn = std::function<void(int mode, double t, std::span<const double> x, std::span<double> dx)>;

/// One axis of an initial box: an interval sampled uniformly, an explicit
/// value set, or a regular grid lo, lo+step, ..., hi.
struct AxisSpec {
  enum class Kind { Interval, Values, Grid };
  Kind kind = Kind::Values;
  double lo = 0.0, hi = 0.0, step = 0.0;
  std::vector<double> values;

  bool finite() const { return kind != Kind::Interval; }
  std::vector<double> points() const; // finite kinds only
  double draw(std::mt19937_64& rng) const;
};

struct InitBox {
  int mode = 0;
  std::vector<AxisSpec> axes; // one per variable
};

class InitialSet {
public:
  std::vector<HybridState> states;
  std::vector<InitBox> boxes;

  bool empty() const { return states.empty() && boxes.empty(); }
  bool finite() const;
  /// Cartesian enumeration; only valid when finite().
  std::vector<HybridState> enumerate() const;
  /// Uniform draw over the union (boxes weighted equally with listed states).
  HybridState draw(std::mt19937_64& rng) const;
};

struct MultimodalSystem {
  std::string name;
  std::vector<std::string> modes;
  std::vector<Variable> variables;

  FieldFn field;
  /// Field as text, [mode][variable]. Kept for export and for systems built
  /// from config, where `field` is compiled from it.
  std::vector<std::vector<std::string>> field_text;

  InitialSet init;
  std::vector<std::vector<Region>> guard_over; // [from][to]

  std::size_t dim() const { return variables.size(); }
  std::size_t num_modes() const { return modes.size(); }
  int mode_index(std::string_view name) const;
  int variable_index(std::string_view name) const;
  std::vector<std::string> variable_names() const;

  void derivative(int mode, double t, std::span<const double> x, std::span<double> dx) const {
    field(mode, t, x, dx);
  }
  const Region& over(int from, int to) const {
    return guard_over[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
  }

  /// Everything else full, self-switches empty.
  void default_guard_over();
};

enum class AccumulatorKind { Penalty, Reward };

struct Accumulator {
  std::string name;
  AccumulatorKind kind = AccumulatorKind::Penalty;
};

/// d(pr)/dt = flow(mode, t, x); pr holds every accumulator in declaration order.
using FlowFn = std::function<void(int mode, double t, std::span<const double> x, std::span<double> dpr)>;

/// At a switch from -> to (-1 matches any mode, but never a self-switch):
/// pr[target] = expr(x..., pr..., t).
struct UpdateRule {
  int from = -1;
  int to = -1;
  int target = 0;
  std::string text;
  Expression expr;
};

struct PerformanceMetric {
  std::vector<Accumulator> accumulators;
  std::vector<int> penalty_vars; // indices into accumulators,
  std::vector<int> reward_vars;  // paired position by position
  std::vector<double> weights;   // one per pair

  FlowFn flow;
  std::vector<std::vector<std::string>> flow_text; // [mode][accumulator]
  std::vector<UpdateRule> updates;

  std::size_t size() const { return accumulators.size(); }
  int accumulator_index(std::string_view name) const;
  std::vector<std::string> accumulator_names() const;

  /// In-place jump map at a switch; identity when from == to.
  void apply_update(int from, int to, double t, std::span<const double> x, std::span<double> pr) const;
};

/// Symbols visible to field/flow expressions: variables, `t`, `mode`, and
/// each mode name as a constant holding its index.
SymbolTable field_symbols(const MultimodalSystem& sys);
/// Same plus accumulator names after the variables, for update rules.
SymbolTable update_symbols(const MultimodalSystem& sys, const PerformanceMetric& metric);

/// Compile `field_text` into `field`.
void compile_field(MultimodalSystem& sys);
/// Compile `flow_text` into `flow`, and every update rule's text.
void compile_metric(const MultimodalSystem& sys, PerformanceMetric& metric);

struct Diagnostic {
  std::string code;
  std::string message;
};

/// Empty iff every structural invariant holds. Pure.
std::vector<Diagnostic> validate_system(const MultimodalSystem& sys, const PerformanceMetric& metric);

} // namespace optswitch

#include "optswitch/model.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace optswitch {

// ---- initial sets ----------------------------------------------------------

std::vector<double> AxisSpec::points() const {
  switch (kind) {
  case Kind::Values: return values;
  case Kind::Grid: {
    std::vector<double> out;
    if (step <= 0.0) return {lo};
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
    return out;
  }
  case Kind::Interval: break;
  }
  throw std::logic_error("interval axis has no finite point list");
}

double AxisSpec::draw(std::mt19937_64& rng) const {
  if (kind == Kind::Interval) {
    std::uniform_real_distribution<double> u(lo, hi);
    return u(rng);
  }
  const auto pts = points();
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  return pts[pick(rng)];
}

bool InitialSet::finite() const {
  for (const auto& b : boxes)
    for (const auto& a : b.axes)
      if (!a.finite()) return false;
  return true;
}

std::vector<HybridState> InitialSet::enumerate() const {
  std::vector<HybridState> out = states;
  for (const auto& b : boxes) {
    std::vector<std::vector<double>> axes;
    for (const auto& a : b.axes) axes.push_back(a.points());
    std::vector<std::size_t> idx(axes.size(), 0);
    bool any_empty = false;
    for (const auto& a : axes) any_empty = any_empty || a.empty();
    if (any_empty) continue;
    for (;;) {
      HybridState s{b.mode, {}};
      for (std::size_t i = 0; i < axes.size(); ++i) s.x.push_back(axes[i][idx[i]]);
      out.push_back(std::move(s));
      // odometer, first axis fastest
      std::size_t i = 0;
      while (i < axes.size() && ++idx[i] == axes[i].size()) idx[i++] = 0;
      if (i == axes.size()) break;
    }
  }
  return out;
}

HybridState InitialSet::draw(std::mt19937_64& rng) const {
  const std::size_t slots = states.size() + boxes.size();
  if (slots == 0) throw std::logic_error("empty initial set");
  std::uniform_int_distribution<std::size_t> pick(0, slots - 1);
  const std::size_t k = pick(rng);
  if (k < states.size()) return states[k];
  const InitBox& b = boxes[k - states.size()];
  HybridState s{b.mode, {}};
  for (const auto& a : b.axes) s.x.push_back(a.draw(rng));
  return s;
}

// ---- system ----------------------------------------------------------------

int MultimodalSystem::mode_index(std::string_view n) const {
  for (std::size_t i = 0; i < modes.size(); ++i)
    if (modes[i] == n) return static_cast<int>(i);
  return -1;
}

int MultimodalSystem::variable_index(std::string_view n) const {
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (variables[i].name == n) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> MultimodalSystem::variable_names() const {
  std::vector<std::string> out;
  for (const auto& v : variables) out.push_back(v.name);
  return out;
}

void MultimodalSystem::default_guard_over() {
  guard_over.assign(modes.size(), std::vector<Region>(modes.size(), Region::full()));
  for (std::size_t q = 0; q < modes.size(); ++q) guard_over[q][q] = Region::empty();
}

int PerformanceMetric::accumulator_index(std::string_view n) const {
  for (std::size_t i = 0; i < accumulators.size(); ++i)
    if (accumulators[i].name == n) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> PerformanceMetric::accumulator_names() const {
  std::vector<std::string> out;
  for (const auto& a : accumulators) out.push_back(a.name);
  return out;
}

void PerformanceMetric::apply_update(int from, int to, double t, std::span<const double> x,
                                     std::span<double> pr) const {
  if (from == to || updates.empty()) return;
  // all rules read the pre-switch values
  std::vector<double> frame(x.begin(), x.end());
  frame.insert(frame.end(), pr.begin(), pr.end());
  frame.push_back(t);
  frame.push_back(static_cast<double>(from));
  std::vector<double> next(pr.begin(), pr.end());
  for (const auto& u : updates) {
    if ((u.from >= 0 && u.from != from) || (u.to >= 0 && u.to != to)) continue;
    next[static_cast<std::size_t>(u.target)] = u.expr.eval(frame);
  }
  std::copy(next.begin(), next.end(), pr.begin());
}

SymbolTable field_symbols(const MultimodalSystem& sys) {
  SymbolTable s;
  for (const auto& v : sys.variables) s.slots.push_back(v.name);
  s.slots.push_back("t");
  s.slots.push_back("mode");
  for (std::size_t q = 0; q < sys.modes.size(); ++q) s.constants[sys.modes[q]] = static_cast<double>(q);
  return s;
}

SymbolTable update_symbols(const MultimodalSystem& sys, const PerformanceMetric& metric) {
  SymbolTable s;
  for (const auto& v : sys.variables) s.slots.push_back(v.name);
  for (const auto& a : metric.accumulators) s.slots.push_back(a.name);
  s.slots.push_back("t");
  s.slots.push_back("mode");
  for (std::size_t q = 0; q < sys.modes.size(); ++q) s.constants[sys.modes[q]] = static_cast<double>(q);
  return s;
}

namespace {

// [mode][component] compiled expressions evaluated over (x..., t, mode)
struct CompiledTable {
  std::vector<std::vector<Expression>> exprs;
  std::size_t n = 0;

  void eval(int mode, double t, std::span<const double> x, std::span<double> out) const {
    double small[32];
    std::vector<double> big;
    double* frame = small;
    if (n + 2 > 32) {
      big.resize(n + 2);
      frame = big.data();
    }
    for (std::size_t i = 0; i < n; ++i) frame[i] = x[i];
    frame[n] = t;
    frame[n + 1] = static_cast<double>(mode);
    const std::span<const double> f(frame, n + 2);
    const auto& row = exprs[static_cast<std::size_t>(mode)];
    for (std::size_t i = 0; i < row.size(); ++i) out[i] = row[i].eval(f);
  }
};

std::shared_ptr<CompiledTable> compile_table(const std::vector<std::vector<std::string>>& text,
                                             const SymbolTable& sym, std::size_t n,
                                             std::size_t width, const char* what) {
  auto table = std::make_shared<CompiledTable>();
  table->n = n;
  for (std::size_t q = 0; q < text.size(); ++q) {
    if (text[q].size() != width)
      throw ExpressionError(std::string(what) + " row for mode " + std::to_string(q) + " has " +
                            std::to_string(text[q].size()) + " entries, expected " +
                            std::to_string(width));
    std::vector<Expression> row;
    for (const auto& s : text[q]) row.push_back(Expression::compile(s, sym));
    table->exprs.push_back(std::move(row));
  }
  return table;
}

} // namespace

void compile_field(MultimodalSystem& sys) {
  auto table = compile_table(sys.field_text, field_symbols(sys), sys.dim(), sys.dim(), "dynamics");
  sys.field = [table](int mode, double t, std::span<const double> x, std::span<double> dx) {
    table->eval(mode, t, x, dx);
  };
}

void compile_metric(const MultimodalSystem& sys, PerformanceMetric& metric) {
  auto table = compile_table(metric.flow_text, field_symbols(sys), sys.dim(), metric.size(), "metric");
  metric.flow = [table](int mode, double t, std::span<const double> x, std::span<double> dpr) {
    table->eval(mode, t, x, dpr);
  };
  const SymbolTable us = update_symbols(sys, metric);
  for (auto& u : metric.updates) u.expr = Expression::compile(u.text, us);
}

// ---- validation ------------------------------------------------------------

std::vector<Diagnostic> validate_system(const MultimodalSystem& sys, const PerformanceMetric& metric) {
  std::vector<Diagnostic> out;
  auto add = [&](std::string code, std::string msg) { out.push_back({std::move(code), std::move(msg)}); };

  const std::size_t N = sys.num_modes();
  const std::size_t n = sys.dim();
  if (N == 0) add("no-modes", "system declares no modes");
  if (n == 0) add("no-variables", "system declares no continuous variables");

  for (const auto& v : sys.variables) {
    if (v.role == VariableRole::Clock && !(v.period > 0.0))
      add("clock-period", "clock variable '" + v.name + "' needs a positive period");
    if (!(v.lo <= v.hi)) add("variable-box", "variable '" + v.name + "' has an empty box");
  }

  if (sys.init.empty()) add("no-initial-states", "initial set is empty");
  for (const auto& s : sys.init.states) {
    if (s.mode < 0 || static_cast<std::size_t>(s.mode) >= N)
      add("init-mode", "initial state mode " + std::to_string(s.mode) + " is not a declared mode");
    if (s.x.size() != n) add("init-dim", "initial state has wrong dimension");
    for (double v : s.x)
      if (!std::isfinite(v)) add("init-finite", "initial state has a non-finite component");
  }
  for (const auto& b : sys.init.boxes) {
    if (b.mode < 0 || static_cast<std::size_t>(b.mode) >= N)
      add("init-mode", "initial box mode " + std::to_string(b.mode) + " is not a declared mode");
    if (b.axes.size() != n) add("init-dim", "initial box has wrong dimension");
  }

  if (sys.guard_over.size() != N) {
    add("guard-over-shape", "guard over-approximation table is not N x N");
  } else {
    for (std::size_t q = 0; q < N; ++q) {
      if (sys.guard_over[q].size() != N) {
        add("guard-over-shape", "guard over-approximation table is not N x N");
        break;
      }
      if (!sys.guard_over[q][q].is_empty())
        add("self-switch", "guard over-approximation for " + sys.modes[q] + " -> " + sys.modes[q] +
                               " is nonempty");
      for (std::size_t r = 0; r < N; ++r)
        for (const auto& piece : sys.guard_over[q][r].pieces())
          for (const auto& c : piece.constraints)
            if (c.coeffs.size() != n)
              add("guard-over-dim", "constraint in " + sys.modes[q] + " -> " + sys.modes[r] +
                                        " has wrong dimension");
    }
  }

  if (metric.penalty_vars.size() != metric.reward_vars.size())
    add("penalty-reward-count", "penalty/reward count mismatch: " +
                                    std::to_string(metric.penalty_vars.size()) + " penalties, " +
                                    std::to_string(metric.reward_vars.size()) + " rewards");
  if (!metric.weights.empty() && metric.weights.size() != metric.penalty_vars.size())
    add("weights-count", "cost weight count does not match the number of penalty/reward pairs");
  if (metric.penalty_vars.empty()) add("no-penalties", "metric declares no penalty/reward pair");
  auto check_index = [&](int i, AccumulatorKind want, const char* what) {
    if (i < 0 || static_cast<std::size_t>(i) >= metric.size()) {
      add("accumulator-index", std::string(what) + " index out of range");
    } else if (metric.accumulators[static_cast<std::size_t>(i)].kind != want) {
      add("accumulator-kind", std::string(what) + " '" +
                                  metric.accumulators[static_cast<std::size_t>(i)].name +
                                  "' has the wrong kind");
    }
  };
  for (int i : metric.penalty_vars) check_index(i, AccumulatorKind::Penalty, "penalty");
  for (int i : metric.reward_vars) check_index(i, AccumulatorKind::Reward, "reward");
  for (const auto& u : metric.updates) {
    if (u.from >= 0 && u.from == u.to)
      add("update-self", "update rule for a self-switch would break the identity requirement");
    if (u.target < 0 || static_cast<std::size_t>(u.target) >= metric.size())
      add("update-target", "update rule targets an unknown accumulator");
  }

  // field/flow finiteness on the declared box, deterministic probe points
  if (N > 0 && n > 0 && sys.field) {
    std::mt19937_64 rng(12345);
    std::vector<double> x(n), dx(n), dpr(metric.size());
    bool field_bad = false, flow_bad = false;
    for (std::size_t q = 0; q < N && !(field_bad && flow_bad); ++q) {
      for (int k = 0; k < 64; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
          const auto& v = sys.variables[i];
          double lo = v.lo, hi = v.hi;
          if (v.role == VariableRole::Clock) lo = 0.0, hi = v.period;
          x[i] = std::uniform_real_distribution<double>(lo, hi)(rng);
        }
        const double t = std::uniform_real_distribution<double>(0.0, 10.0)(rng);
        sys.field(static_cast<int>(q), t, x, dx);
        for (double d : dx) field_bad = field_bad || !std::isfinite(d);
        if (metric.flow) {
          metric.flow(static_cast<int>(q), t, x, dpr);
          for (double d : dpr) flow_bad = flow_bad || !std::isfinite(d);
        }
      }
    }
    if (field_bad) add("field-finite", "vector field is not finite on the declared box");
    if (flow_bad) add("flow-finite", "metric flow is not finite on the declared box");
  } else if (!sys.field) {
    add("no-field", "vector field is not defined");
  }
  if (!metric.flow) add("no-flow", "metric flow is not defined");
  return out;
}

} // namespace optswitch

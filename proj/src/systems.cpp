#include "optswitch/systems.hpp"

#include <cmath>
#include <stdexcept>

namespace optswitch {

namespace {

std::string num(double v) { return format_number(v); }

void finish(SystemBundle& b) {
  // both faces of every built-in: native lambdas for speed, text for export
  compile_metric(b.system, b.metric);
}

// ---- thermostat ------------------------------------------------------------

NamedSystem thermostat(bool equal_weight) {
  NamedSystem ns;
  ns.id = equal_weight ? "thermostat-equal-weight" : "thermostat";
  auto& sys = ns.bundle.system;
  auto& metric = ns.bundle.metric;
  sys.name = ns.id;
  sys.modes = {"OFF", "HEAT", "COOL"};
  sys.variables = {{"temp", VariableRole::State, 0.0, true, -10.0, 60.0},
                   {"out", VariableRole::Parameter, 0.0, true, -10.0, 40.0}};
  sys.field_text = {
      {"-0.1*(temp - out)", "0"},
      {"-0.1*(temp - out) + 0.05*(80 - temp)", "0"},
      {"-0.1*(temp - out) - 0.15*temp", "0"},
  };
  sys.field = [](int mode, double, std::span<const double> x, std::span<double> dx) {
    const double temp = x[0], out = x[1];
    double d = -0.1 * (temp - out);
    if (mode == 1) d += 0.05 * (80.0 - temp);
    else if (mode == 2) d -= 0.15 * temp;
    dx[0] = d;
    dx[1] = 0.0;
  };
  // OFF temp=22 out=16 is one point of this grid
  sys.init.boxes.push_back({0,
                            {AxisSpec{AxisSpec::Kind::Grid, 16.0, 26.0, 0.1, {}},
                             AxisSpec{AxisSpec::Kind::Values, 0, 0, 0, {16.0, 26.0}}}});
  sys.default_guard_over();

  metric.accumulators = {{"discomfort", AccumulatorKind::Penalty},
                         {"fuel", AccumulatorKind::Penalty},
                         {"swTear", AccumulatorKind::Penalty},
                         {"time", AccumulatorKind::Reward}};
  metric.penalty_vars = {0, 1, 2};
  metric.reward_vars = {3, 3, 3};
  metric.weights = equal_weight ? std::vector<double>{1, 1, 1} : std::vector<double>{10, 1, 1};
  // fuel burns only while an actuator runs
  const std::vector<std::string> off{"(temp - 20)^2", "0", "0", "1"};
  const std::vector<std::string> on{"(temp - 20)^2", "(temp - out)^2", "0", "1"};
  metric.flow_text = {off, on, on};
  metric.flow = [](int mode, double, std::span<const double> x, std::span<double> dpr) {
    const double temp = x[0], out = x[1];
    dpr[0] = (temp - 20.0) * (temp - 20.0);
    dpr[1] = mode == 0 ? 0.0 : (temp - out) * (temp - out);
    dpr[2] = 0.0;
    dpr[3] = 1.0;
  };
  metric.updates.push_back({-1, -1, 2, "swTear + 0.5", {}});
  finish(ns.bundle);

  auto& s = ns.bundle.settings;
  s.set("step", 0.01);
  s.set("M", 1000);
  s.set("sentinel", 2000);
  s.set("switches", 2);
  s.set("zero_dwell", 1e-4);
  s.set("restarts", 20);
  s.set("bound_dwell", 6);
  s.set("bound_tp", 10);
  s.set("bound_rep", 8);
  s.set("max_inits", 40);
  s.set("epsilon", 0.1);
  s.set("delta", 0.05);
  s.set("horizon", 50);
  s.set("min_window", 1.0);

  using R = Relation;
  if (equal_weight) {
    ns.reference_guards = {{"HEAT", "OFF", "temp", R::GreaterEqual, 20.0, 0.25, "out", 16},
                           {"OFF", "HEAT", "temp", R::LessEqual, 18.8, 0.25, "out", 16},
                           {"COOL", "OFF", "temp", R::LessEqual, 21.9, 0.25, "out", 26},
                           {"OFF", "COOL", "temp", R::GreaterEqual, 22.7, 0.25, "out", 26}};
  } else {
    ns.reference_guards = {{"HEAT", "OFF", "temp", R::GreaterEqual, 20.2, 0.15, "out", 16},
                           {"OFF", "HEAT", "temp", R::LessEqual, 19.6, 0.15, "out", 16},
                           {"COOL", "OFF", "temp", R::LessEqual, 20.0, 0.15, "out", 26},
                           {"OFF", "COOL", "temp", R::GreaterEqual, 20.3, 0.15, "out", 26}};
  }
  return ns;
}

// ---- oil pump --------------------------------------------------------------

constexpr double kTwoPi = 6.283185307179586;

NamedSystem oil_pump(bool cost2) {
  NamedSystem ns;
  ns.id = cost2 ? "oil-pump-cost2" : "oil-pump-cost1";
  auto& sys = ns.bundle.system;
  auto& metric = ns.bundle.metric;
  sys.name = ns.id;
  sys.modes = {"OFF", "ON"};
  // consumption depends on absolute time, carried as a clock
  sys.variables = {{"V", VariableRole::State, 0.0, true, -20.0, 30.0},
                   {"t", VariableRole::Clock, kTwoPi, true, 0.0, 100.0}};
  sys.field_text = {{"-3*(cos(t) + 1)", "1"}, {"4 - 3*(cos(t) + 1)", "1"}};
  sys.field = [](int mode, double, std::span<const double> x, std::span<double> dx) {
    dx[0] = (mode == 1 ? 4.0 : 0.0) - 3.0 * (std::cos(x[1]) + 1.0);
    dx[1] = 1.0;
  };
  sys.init.states.push_back({0, {4.0, 0.0}});
  sys.default_guard_over();

  metric.accumulators = {{"p1", AccumulatorKind::Penalty}, {"r1", AccumulatorKind::Reward}};
  std::vector<std::string> flows{"if(V >= 1 && V <= 8, V, 1000000)", "1"};
  if (cost2) {
    metric.accumulators.push_back({"p2", AccumulatorKind::Penalty});
    metric.accumulators.push_back({"r2", AccumulatorKind::Reward});
    flows.push_back("if(V > 4.5, 1, 0)");
    flows.push_back("if(V < 4.5, 1, 0)");
    metric.penalty_vars = {0, 2};
    metric.reward_vars = {1, 3};
    metric.weights = {1, 1};
  } else {
    metric.penalty_vars = {0};
    metric.reward_vars = {1};
    metric.weights = {1};
  }
  metric.flow_text = {flows, flows};
  metric.flow = [cost2](int, double, std::span<const double> x, std::span<double> dpr) {
    const double V = x[0];
    dpr[0] = (V >= 1.0 && V <= 8.0) ? V : 1e6;
    dpr[1] = 1.0;
    if (cost2) {
      dpr[2] = V > 4.5 ? 1.0 : 0.0;
      dpr[3] = V < 4.5 ? 1.0 : 0.0;
    }
  };
  finish(ns.bundle);

  auto& s = ns.bundle.settings;
  s.set("step", 0.005);
  s.set("M", 1000);
  s.set("sentinel", 2000);
  s.set("switches", 2);
  s.set("zero_dwell", 1e-4);
  s.set("restarts", 20);
  s.set("bound_dwell", 8);
  s.set("bound_tp", 8);
  s.set("bound_rep", 14);
  s.set("epsilon", 0.1);
  s.set("delta", 0.05);
  s.set("horizon", 100);
  s.set("min_window", 1.0);
  // the 1e6 penalty outside [1, 8] leaves few finite-looking probes; screen wide
  s.set("screen_probes", 20000);

  using R = Relation;
  if (cost2)
    ns.reference_guards = {{"OFF", "ON", "V", R::LessEqual, 4.07, 0.2, "", 0},
                           {"ON", "OFF", "V", R::GreaterEqual, 4.71, 0.2, "", 0}};
  else
    ns.reference_guards = {{"OFF", "ON", "V", R::LessEqual, 3.71, 0.2, "", 0},
                           {"ON", "OFF", "V", R::GreaterEqual, 4.62, 0.2, "", 0}};
  return ns;
}

// ---- buck-boost converter --------------------------------------------------

constexpr double kC = 3.3e-6, kL = 47e-6, kRc = 0.06, kRl = 0.1, kRd = 0.05, kRs = 0.05, kE = 10.0, kVd = 5.0;
constexpr double kLoadPeriod = 1.2e-3; // R is 100 then 200 ohm, 0.6 ms each

double load(double t) {
  const double ph = std::fmod(t, kLoadPeriod);
  return (ph < 0 ? ph + kLoadPeriod : ph) < 0.5 * kLoadPeriod ? 100.0 : 200.0;
}

NamedSystem buck_boost() {
  NamedSystem ns;
  ns.id = "buck-boost";
  auto& sys = ns.bundle.system;
  auto& metric = ns.bundle.metric;
  sys.name = ns.id;
  sys.modes = {"CHARGE", "TRANSFER", "IDLE"};
  Variable clock{"t", VariableRole::Clock, kLoadPeriod, false, 0.0, 1.0};
  sys.variables = {{"iL", VariableRole::State, 0.0, true, -5.0, 10.0},
                   {"uC", VariableRole::State, 0.0, true, 0.0, 40.0},
                   clock};

  const std::string R = "if(mod(t, " + num(kLoadPeriod) + ") < " + num(0.5 * kLoadPeriod) + ", 100, 200)";
  const std::string C = num(kC), L = num(kL), rC = num(kRc), rL = num(kRl), rd = num(kRd), rs = num(kRs), E = num(kE);
  const std::string k = "(" + R + ")/((" + R + ") + " + rC + ")"; // R/(R+rC)
  sys.field_text = {
      {"((-" + rL + " - " + rs + ")/" + L + ")*iL + " + E + "/" + L,
       "(-1/(" + C + "*((" + R + ") + " + rC + ")))*uC", "1"},
      {"((-" + rL + " - " + rd + ")/" + L + ")*iL - uC/" + L + " + " + E + "/" + L,
       k + "*(1/" + C + " - " + rC + "*(" + rL + " + " + rd + ")/" + L + ")*iL - " + k + "*(" + rC + "/" + L +
           " + 1/((" + R + ")*" + C + "))*uC + " + k + "*(" + rC + "/" + L + ")*" + E,
       "1"},
      {"0", "(-1/(((" + R + ") + " + rC + ")*" + C + "))*uC", "1"},
  };
  sys.field = [](int mode, double, std::span<const double> x, std::span<double> dx) {
    const double iL = x[0], uC = x[1], Rl = load(x[2]);
    const double k = Rl / (Rl + kRc);
    switch (mode) {
    case 0:
      dx[0] = ((-kRl - kRs) / kL) * iL + kE / kL;
      dx[1] = (-1.0 / (kC * (Rl + kRc))) * uC;
      break;
    case 1:
      dx[0] = ((-kRl - kRd) / kL) * iL - uC / kL + kE / kL;
      dx[1] = k * (1.0 / kC - kRc * (kRl + kRd) / kL) * iL - k * (kRc / kL + 1.0 / (Rl * kC)) * uC +
              k * (kRc / kL) * kE;
      break;
    default:
      dx[0] = 0.0;
      dx[1] = (-1.0 / ((Rl + kRc) * kC)) * uC;
      break;
    }
    dx[2] = 1.0;
  };
  sys.init.states.push_back({0, {0.0, 5.0, 0.0}});
  sys.default_guard_over();
  {
    ConvexRegion zero_current;
    zero_current.constraints.push_back({{1.0, 0.0, 0.0}, 0.0, Relation::Equal});
    sys.guard_over[1][2] = Region::of(zero_current);
    // only the three guards of the charge/transfer/idle ring exist
    sys.guard_over[0][2] = Region::empty();
    sys.guard_over[1][0] = Region::empty();
    sys.guard_over[2][1] = Region::empty();
  }

  metric.accumulators = {{"p1", AccumulatorKind::Penalty}, {"r1", AccumulatorKind::Reward}};
  const std::string vr = k + "*uC";
  const std::vector<std::string> flows{"(" + vr + " - " + num(kVd) + ")^2", "1"};
  metric.flow_text = {flows, flows, flows};
  metric.penalty_vars = {0};
  metric.reward_vars = {1};
  metric.weights = {1};
  metric.flow = [](int, double, std::span<const double> x, std::span<double> dpr) {
    const double v = buck_boost_output(x[2], x[1]) - kVd;
    dpr[0] = v * v;
    dpr[1] = 1.0;
  };
  finish(ns.bundle);

  auto& s = ns.bundle.settings;
  s.set("step", 2e-7);
  // d is in amps and volts at microsecond scale; a weak M lets non-recurring windows win
  s.set("M", 1e5);
  s.set("sentinel", 1e7);
  s.set("switches", 2);
  s.set("zero_dwell", 1e-6);
  s.set("restarts", 8);
  s.set("bound_dwell", 4e-4);
  s.set("bound_tp", 1.5e-3);
  s.set("bound_rep", 1.2e-3);
  s.set("epsilon", 0.1);
  s.set("delta", 0.05);
  s.set("horizon", 6e-3);
  s.set("max_horizon", 1e-2);
  s.set("min_window", 5e-5);

  using Rel = Relation;
  ns.reference_guards = {{"CHARGE", "TRANSFER", "iL", Rel::GreaterEqual, 1.9, 0.0, "", 0},
                         {"TRANSFER", "IDLE", "iL", Rel::Equal, 0.0, 0.0, "", 0},
                         {"IDLE", "CHARGE", "uC", Rel::LessEqual, 4.6, 0.0, "", 0}};
  return ns;
}

} // namespace

double buck_boost_output(double t, double uC) {
  const double Rl = load(t);
  return Rl / (Rl + kRc) * uC;
}

SwitchingLogic NamedSystem::reference_logic() const {
  const auto& sys = bundle.system;
  SwitchingLogic logic = SwitchingLogic::none(sys.num_modes());
  for (const auto& g : reference_guards) {
    const int from = sys.mode_index(g.from), to = sys.mode_index(g.to);
    ConvexRegion piece;
    LinearConstraint c;
    c.coeffs.assign(sys.dim(), 0.0);
    c.coeffs[static_cast<std::size_t>(sys.variable_index(g.variable))] = 1.0;
    c.offset = -g.threshold;
    c.relation = g.relation;
    piece.constraints.push_back(c);
    if (!g.condition_variable.empty()) {
      LinearConstraint e;
      e.coeffs.assign(sys.dim(), 0.0);
      e.coeffs[static_cast<std::size_t>(sys.variable_index(g.condition_variable))] = 1.0;
      e.offset = -g.condition_value;
      e.relation = Relation::Equal;
      piece.constraints.push_back(e);
    }
    logic.guards[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)].add(piece);
  }
  return logic;
}

std::vector<std::string> named_system_ids() {
  return {"thermostat", "thermostat-equal-weight", "oil-pump-cost1", "oil-pump-cost2", "buck-boost"};
}

NamedSystem load_named(std::string_view id) {
  if (id == "thermostat") return thermostat(false);
  if (id == "thermostat-equal-weight") return thermostat(true);
  if (id == "oil-pump-cost1") return oil_pump(false);
  if (id == "oil-pump-cost2") return oil_pump(true);
  if (id == "buck-boost") return buck_boost();
  throw std::invalid_argument("unknown system '" + std::string(id) + "'");
}

} // namespace optswitch

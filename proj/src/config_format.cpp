#include "optswitch/config_format.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace optswitch {

double Settings::get(std::string_view key, double fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

namespace {

struct Line {
  int number;
  std::string text;
};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

double parse_number(std::string_view s, int line) {
  const std::string t = trim(s);
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) fail(line, "expected a number, got '" + t + "'");
  return v;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::vector<double> number_list(std::string_view s, int line) {
  std::vector<double> out;
  std::size_t start = 0;
  for (;;) {
    const auto at = s.find(',', start);
    out.push_back(parse_number(s.substr(start, at == std::string_view::npos ? s.npos : at - start), line));
    if (at == std::string_view::npos) return out;
    start = at + 1;
  }
}

// "a=1 b=grid(1, 2, 0.5) c={1,2}" -> pairs; brackets may hold spaces
std::vector<std::pair<std::string, std::string>> assignments(std::string_view s, int line) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size()) break;
    const std::size_t eq = s.find('=', i);
    if (eq == std::string_view::npos) fail(line, "expected name=value in '" + std::string(s) + "'");
    std::string key = trim(s.substr(i, eq - i));
    std::size_t j = eq + 1;
    while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    const std::size_t vstart = j;
    int depth = 0;
    while (j < s.size()) {
      const char c = s[j];
      if (c == '(' || c == '[' || c == '{') ++depth;
      else if (c == ')' || c == ']' || c == '}') --depth;
      else if (depth == 0 && std::isspace(static_cast<unsigned char>(c))) break;
      ++j;
    }
    out.emplace_back(std::move(key), trim(s.substr(vstart, j - vstart)));
    i = j;
  }
  return out;
}

AxisSpec parse_axis(const std::string& v, int line) {
  AxisSpec a;
  if (v.empty()) fail(line, "empty axis value");
  if (v.front() == '[' && v.back() == ']') {
    const auto xs = number_list(std::string_view(v).substr(1, v.size() - 2), line);
    if (xs.size() != 2) fail(line, "interval needs two bounds");
    a.kind = AxisSpec::Kind::Interval;
    a.lo = xs[0];
    a.hi = xs[1];
  } else if (v.front() == '{' && v.back() == '}') {
    a.kind = AxisSpec::Kind::Values;
    a.values = number_list(std::string_view(v).substr(1, v.size() - 2), line);
  } else if (v.rfind("grid(", 0) == 0 && v.back() == ')') {
    const auto xs = number_list(std::string_view(v).substr(5, v.size() - 6), line);
    if (xs.size() != 3 || !(xs[2] > 0.0)) fail(line, "grid(lo, hi, step) needs a positive step");
    a.kind = AxisSpec::Kind::Grid;
    a.lo = xs[0];
    a.hi = xs[1];
    a.step = xs[2];
  } else {
    a.kind = AxisSpec::Kind::Values;
    a.values = {parse_number(v, line)};
  }
  if (a.kind == AxisSpec::Kind::Interval && !(a.lo <= a.hi)) fail(line, "interval bounds reversed");
  return a;
}

int mode_or_any(const MultimodalSystem& sys, const std::string& name, int line) {
  if (name == "*") return -1;
  const int q = sys.mode_index(name);
  if (q < 0) fail(line, "unknown mode '" + name + "'");
  return q;
}

bool parse_bool(const std::string& v, int line) {
  if (v == "yes" || v == "true" || v == "1") return true;
  if (v == "no" || v == "false" || v == "0") return false;
  fail(line, "expected yes/no, got '" + v + "'");
}

// "MODE.name = expr"
bool split_dotted(const std::string& text, std::string& mode, std::string& name, std::string& expr) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) return false;
  const std::string lhs = trim(std::string_view(text).substr(0, eq));
  const auto dot = lhs.find('.');
  if (dot == std::string::npos) return false;
  mode = trim(std::string_view(lhs).substr(0, dot));
  name = trim(std::string_view(lhs).substr(dot + 1));
  expr = trim(std::string_view(text).substr(eq + 1));
  return true;
}

} // namespace

SystemBundle parse_config(std::string_view text) {
  std::map<std::string, std::vector<Line>> sections;
  {
    std::string current;
    int number = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
      ++number;
      if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
      std::string s = trim(raw);
      if (s.empty()) continue;
      if (s.front() == '[' && s.back() == ']') {
        current = trim(std::string_view(s).substr(1, s.size() - 2));
        static const char* kKnown[] = {"system",  "modes",       "variables",    "dynamics", "metric",
                                       "init",    "guards-over", "cost-weights", "settings"};
        bool ok = false;
        for (const char* k : kKnown) ok = ok || current == k;
        if (!ok) fail(number, "unknown section [" + current + "]");
        sections[current];
        continue;
      }
      if (current.empty()) fail(number, "directive outside any section");
      sections[current].push_back({number, std::move(s)});
    }
  }
  auto section = [&](const char* name) -> const std::vector<Line>& {
    static const std::vector<Line> none;
    auto it = sections.find(name);
    return it == sections.end() ? none : it->second;
  };

  SystemBundle b;
  MultimodalSystem& sys = b.system;
  PerformanceMetric& metric = b.metric;

  for (const auto& l : section("system")) {
    const auto eq = l.text.find('=');
    if (eq == std::string::npos) fail(l.number, "expected key = value");
    const std::string key = trim(std::string_view(l.text).substr(0, eq));
    if (key != "name") fail(l.number, "unknown [system] key '" + key + "'");
    sys.name = trim(std::string_view(l.text).substr(eq + 1));
  }

  for (const auto& l : section("modes")) {
    for (auto& w : words(l.text)) {
      if (sys.mode_index(w) >= 0) fail(l.number, "duplicate mode '" + w + "'");
      if (!(std::isalpha(static_cast<unsigned char>(w[0])) || w[0] == '_'))
        fail(l.number, "mode names must be identifiers: '" + w + "'");
      sys.modes.push_back(w);
    }
  }
  if (sys.modes.empty()) throw ConfigError("config declares no modes");

  for (const auto& l : section("variables")) {
    const auto ws = words(l.text);
    if (ws.size() < 2) fail(l.number, "expected '<name> <state|parameter|clock> [key=value ...]'");
    Variable v;
    v.name = ws[0];
    if (sys.variable_index(v.name) >= 0) fail(l.number, "duplicate variable '" + v.name + "'");
    if (ws[1] == "state") v.role = VariableRole::State;
    else if (ws[1] == "parameter") v.role = VariableRole::Parameter;
    else if (ws[1] == "clock") v.role = VariableRole::Clock;
    else fail(l.number, "unknown variable role '" + ws[1] + "'");
    const auto rest = l.text.substr(l.text.find(ws[1], ws[0].size()) + ws[1].size());
    for (const auto& [k, val] : assignments(rest, l.number)) {
      if (k == "period") v.period = parse_number(val, l.number);
      else if (k == "lo") v.lo = parse_number(val, l.number);
      else if (k == "hi") v.hi = parse_number(val, l.number);
      else if (k == "distance") v.in_distance = parse_bool(val, l.number);
      else fail(l.number, "unknown variable attribute '" + k + "'");
    }
    sys.variables.push_back(std::move(v));
  }
  if (sys.variables.empty()) throw ConfigError("config declares no variables");

  const std::size_t N = sys.modes.size();
  const std::size_t n = sys.variables.size();
  sys.field_text.assign(N, std::vector<std::string>(n, "0"));
  for (const auto& l : section("dynamics")) {
    std::string mode, var, expr;
    if (!split_dotted(l.text, mode, var, expr)) fail(l.number, "expected MODE.variable = expression");
    const int i = sys.variable_index(var);
    if (i < 0) fail(l.number, "unknown variable '" + var + "'");
    const int q = mode_or_any(sys, mode, l.number);
    for (std::size_t r = 0; r < N; ++r)
      if (q < 0 || static_cast<std::size_t>(q) == r) sys.field_text[r][static_cast<std::size_t>(i)] = expr;
  }
  try {
    compile_field(sys);
  } catch (const ExpressionError& e) {
    throw ConfigError(std::string("[dynamics]: ") + e.what());
  }

  // metric: declarations first, overrides and updates after
  std::vector<std::string> flow_defaults;
  for (const auto& l : section("metric")) {
    const auto ws = words(l.text);
    if (ws.empty() || (ws[0] != "penalty" && ws[0] != "reward")) continue;
    const auto eq = l.text.find('=');
    if (eq == std::string::npos || ws.size() < 2) fail(l.number, "expected 'penalty <name> = expr'");
    Accumulator a;
    a.kind = ws[0] == "penalty" ? AccumulatorKind::Penalty : AccumulatorKind::Reward;
    a.name = trim(std::string_view(l.text).substr(ws[0].size(), eq - ws[0].size()));
    if (metric.accumulator_index(a.name) >= 0) fail(l.number, "duplicate accumulator '" + a.name + "'");
    if (sys.variable_index(a.name) >= 0) fail(l.number, "accumulator '" + a.name + "' shadows a variable");
    metric.accumulators.push_back(a);
    flow_defaults.push_back(trim(std::string_view(l.text).substr(eq + 1)));
  }
  metric.flow_text.assign(N, flow_defaults);
  for (const auto& l : section("metric")) {
    const auto ws = words(l.text);
    if (ws[0] == "penalty" || ws[0] == "reward") continue;
    if (ws[0] == "update") {
      // update FROM -> TO name = expr
      if (ws.size() < 6 || ws[2] != "->") fail(l.number, "expected 'update FROM -> TO name = expr'");
      UpdateRule u;
      u.from = mode_or_any(sys, ws[1], l.number);
      u.to = mode_or_any(sys, ws[3], l.number);
      const auto eq = l.text.find('=');
      if (eq == std::string::npos) fail(l.number, "update rule needs '='");
      const auto name_start = l.text.find(ws[4], l.text.find("->") + 2);
      const std::string name = trim(std::string_view(l.text).substr(name_start, eq - name_start));
      u.target = metric.accumulator_index(name);
      if (u.target < 0) fail(l.number, "update targets unknown accumulator '" + name + "'");
      u.text = trim(std::string_view(l.text).substr(eq + 1));
      metric.updates.push_back(std::move(u));
      continue;
    }
    std::string mode, name, expr;
    if (!split_dotted(l.text, mode, name, expr)) fail(l.number, "unrecognised [metric] directive");
    const int i = metric.accumulator_index(name);
    if (i < 0) fail(l.number, "unknown accumulator '" + name + "'");
    const int q = mode_or_any(sys, mode, l.number);
    for (std::size_t r = 0; r < N; ++r)
      if (q < 0 || static_cast<std::size_t>(q) == r) metric.flow_text[r][static_cast<std::size_t>(i)] = expr;
  }
  if (metric.accumulators.empty()) throw ConfigError("config declares no penalty/reward accumulators");

  for (const auto& l : section("cost-weights")) {
    // P / R = w
    const auto slash = l.text.find('/');
    const auto eq = l.text.find('=');
    if (slash == std::string::npos || eq == std::string::npos || eq < slash)
      fail(l.number, "expected 'penalty / reward = weight'");
    const std::string p = trim(std::string_view(l.text).substr(0, slash));
    const std::string r = trim(std::string_view(l.text).substr(slash + 1, eq - slash - 1));
    const int pi = metric.accumulator_index(p);
    const int ri = metric.accumulator_index(r);
    if (pi < 0) fail(l.number, "unknown penalty '" + p + "'");
    if (ri < 0) fail(l.number, "unknown reward '" + r + "'");
    metric.penalty_vars.push_back(pi);
    metric.reward_vars.push_back(ri);
    metric.weights.push_back(parse_number(std::string_view(l.text).substr(eq + 1), l.number));
  }
  try {
    compile_metric(sys, metric);
  } catch (const ExpressionError& e) {
    throw ConfigError(std::string("[metric]: ") + e.what());
  }

  for (const auto& l : section("init")) {
    const auto ws = words(l.text);
    if (ws.size() < 2 || (ws[0] != "state" && ws[0] != "box")) fail(l.number, "expected 'state MODE ...' or 'box MODE ...'");
    const int q = sys.mode_index(ws[1]);
    if (q < 0) fail(l.number, "unknown mode '" + ws[1] + "'");
    const auto after_mode = l.text.find(ws[1], ws[0].size()) + ws[1].size();
    const auto kv = assignments(std::string_view(l.text).substr(after_mode), l.number);
    std::vector<AxisSpec> axes(n);
    std::vector<bool> seen(n, false);
    for (const auto& [k, val] : kv) {
      const int i = sys.variable_index(k);
      if (i < 0) fail(l.number, "unknown variable '" + k + "'");
      axes[static_cast<std::size_t>(i)] = parse_axis(val, l.number);
      seen[static_cast<std::size_t>(i)] = true;
    }
    for (std::size_t i = 0; i < n; ++i)
      if (!seen[i]) fail(l.number, "initial entry misses variable '" + sys.variables[i].name + "'");
    if (ws[0] == "state") {
      HybridState s{q, {}};
      for (const auto& a : axes) {
        if (a.kind != AxisSpec::Kind::Values || a.values.size() != 1)
          fail(l.number, "'state' entries take plain numbers; use 'box' for sets");
        s.x.push_back(a.values[0]);
      }
      sys.init.states.push_back(std::move(s));
    } else {
      sys.init.boxes.push_back({q, std::move(axes)});
    }
  }

  sys.default_guard_over();
  const auto names = sys.variable_names();
  for (const auto& l : section("guards-over")) {
    const auto arrow = l.text.find("->");
    const auto colon = l.text.find(':');
    if (arrow == std::string::npos || colon == std::string::npos || colon < arrow)
      fail(l.number, "expected 'FROM -> TO : region'");
    const int from = sys.mode_index(trim(std::string_view(l.text).substr(0, arrow)));
    const int to = sys.mode_index(trim(std::string_view(l.text).substr(arrow + 2, colon - arrow - 2)));
    if (from < 0 || to < 0) fail(l.number, "unknown mode in guard over-approximation");
    try {
      sys.guard_over[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)] =
          parse_region(std::string_view(l.text).substr(colon + 1), names);
    } catch (const ExpressionError& e) {
      fail(l.number, e.what());
    }
  }

  for (const auto& l : section("settings")) {
    const auto eq = l.text.find('=');
    if (eq == std::string::npos) fail(l.number, "expected key = value");
    b.settings.set(trim(std::string_view(l.text).substr(0, eq)),
                   parse_number(std::string_view(l.text).substr(eq + 1), l.number));
  }
  return b;
}

SystemBundle load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

std::string axis_text(const AxisSpec& a) {
  switch (a.kind) {
  case AxisSpec::Kind::Interval: return "[" + format_number(a.lo) + "," + format_number(a.hi) + "]";
  case AxisSpec::Kind::Grid:
    return "grid(" + format_number(a.lo) + "," + format_number(a.hi) + "," + format_number(a.step) + ")";
  case AxisSpec::Kind::Values:
    if (a.values.size() == 1) return format_number(a.values[0]);
    {
      std::string s = "{";
      for (std::size_t i = 0; i < a.values.size(); ++i) s += (i ? "," : "") + format_number(a.values[i]);
      return s + "}";
    }
  }
  return "";
}

} // namespace

std::string write_config(const SystemBundle& b) {
  const MultimodalSystem& sys = b.system;
  const PerformanceMetric& metric = b.metric;
  std::ostringstream out;
  out << "[system]\nname = " << sys.name << "\n\n[modes]\n";
  for (std::size_t q = 0; q < sys.modes.size(); ++q) out << (q ? " " : "") << sys.modes[q];
  out << "\n\n[variables]\n";
  for (const auto& v : sys.variables) {
    out << v.name << ' '
        << (v.role == VariableRole::State ? "state" : v.role == VariableRole::Parameter ? "parameter" : "clock");
    if (v.role == VariableRole::Clock) out << " period=" << format_number(v.period);
    out << " lo=" << format_number(v.lo) << " hi=" << format_number(v.hi);
    if (!v.in_distance) out << " distance=no";
    out << '\n';
  }
  out << "\n[dynamics]\n";
  for (std::size_t q = 0; q < sys.modes.size(); ++q)
    for (std::size_t i = 0; i < sys.dim(); ++i)
      if (sys.field_text.size() > q && sys.field_text[q][i] != "0")
        out << sys.modes[q] << '.' << sys.variables[i].name << " = " << sys.field_text[q][i] << '\n';

  out << "\n[metric]\n";
  for (std::size_t i = 0; i < metric.size(); ++i) {
    const auto& a = metric.accumulators[i];
    out << (a.kind == AccumulatorKind::Penalty ? "penalty " : "reward ") << a.name << " = "
        << metric.flow_text[0][i] << '\n';
  }
  for (std::size_t q = 1; q < sys.modes.size(); ++q)
    for (std::size_t i = 0; i < metric.size(); ++i)
      if (metric.flow_text[q][i] != metric.flow_text[0][i])
        out << sys.modes[q] << '.' << metric.accumulators[i].name << " = " << metric.flow_text[q][i] << '\n';
  for (const auto& u : metric.updates) {
    out << "update " << (u.from < 0 ? "*" : sys.modes[static_cast<std::size_t>(u.from)]) << " -> "
        << (u.to < 0 ? "*" : sys.modes[static_cast<std::size_t>(u.to)]) << ' '
        << metric.accumulators[static_cast<std::size_t>(u.target)].name << " = " << u.text << '\n';
  }

  out << "\n[cost-weights]\n";
  for (std::size_t k = 0; k < metric.penalty_vars.size(); ++k) {
    out << metric.accumulators[static_cast<std::size_t>(metric.penalty_vars[k])].name << " / "
        << metric.accumulators[static_cast<std::size_t>(metric.reward_vars[k])].name << " = "
        << format_number(k < metric.weights.size() ? metric.weights[k] : 1.0) << '\n';
  }

  out << "\n[init]\n";
  for (const auto& s : sys.init.states) {
    out << "state " << sys.modes[static_cast<std::size_t>(s.mode)];
    for (std::size_t i = 0; i < s.x.size(); ++i) out << ' ' << sys.variables[i].name << '=' << format_number(s.x[i]);
    out << '\n';
  }
  for (const auto& bx : sys.init.boxes) {
    out << "box " << sys.modes[static_cast<std::size_t>(bx.mode)];
    for (std::size_t i = 0; i < bx.axes.size(); ++i) out << ' ' << sys.variables[i].name << '=' << axis_text(bx.axes[i]);
    out << '\n';
  }

  out << "\n[guards-over]\n";
  const auto names = sys.variable_names();
  for (std::size_t q = 0; q < sys.modes.size(); ++q) {
    for (std::size_t r = 0; r < sys.modes.size(); ++r) {
      const Region& g = sys.guard_over[q][r];
      const bool is_default = q == r ? g.is_empty() : g.is_full();
      if (is_default) continue;
      out << sys.modes[q] << " -> " << sys.modes[r] << " : " << to_string(g, names) << '\n';
    }
  }

  if (!b.settings.values.empty()) {
    out << "\n[settings]\n";
    for (const auto& [k, v] : b.settings.values) out << k << " = " << format_number(v) << '\n';
  }
  return out.str();
}

std::string config_hash(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace optswitch

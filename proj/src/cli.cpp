#include "optswitch/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "optswitch/guard_learning.hpp"
#include "optswitch/run_config.hpp"
#include "optswitch/systems.hpp"
#include "optswitch/trajectory_io.hpp"

namespace optswitch {

namespace fs = std::filesystem;
using nlohmann::json;

HybridState parse_hybrid_state(const MultimodalSystem& sys, const std::string& text) {
  std::istringstream in(text);
  std::string tok;
  if (!(in >> tok)) throw std::invalid_argument("empty state");
  HybridState s;
  s.mode = sys.mode_index(tok);
  if (s.mode < 0) throw std::invalid_argument("unknown mode '" + tok + "'");
  s.x.assign(sys.dim(), 0.0);
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("expected var=value, got '" + tok + "'");
    const int v = sys.variable_index(tok.substr(0, eq));
    if (v < 0) throw std::invalid_argument("unknown variable '" + tok.substr(0, eq) + "'");
    s.x[static_cast<std::size_t>(v)] = std::stod(tok.substr(eq + 1));
  }
  return s;
}

std::vector<double> parse_number_list(const std::string& text) {
  std::string t = text;
  for (char& c : t)
    if (c == ',' || c == ';' || c == '(' || c == ')') c = ' ';
  std::istringstream in(t);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("not a number: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

namespace {

struct Common {
  std::string system_id, config_path, out_dir = "out", format = "csv", init_text;
  std::uint64_t seed = 0;
  double horizon = 0.0;
  int switches = 0, restarts = 0, threads = -1;
  double epsilon = 0.0, delta = 0.0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--system", c.system_id, "built-in system id");
  cmd->add_option("--config", c.config_path, "system config file");
  cmd->add_option("--seed", c.seed, "rng seed");
  cmd->add_option("--out", c.out_dir, "output directory");
  cmd->add_option("--horizon", c.horizon, "simulation horizon");
  cmd->add_option("--switches", c.switches, "supersequence repetitions k");
  cmd->add_option("--restarts", c.restarts, "Nelder-Mead restarts per initial state");
  cmd->add_option("--epsilon", c.epsilon, "PAC epsilon");
  cmd->add_option("--delta", c.delta, "PAC delta");
  cmd->add_option("--threads", c.threads, "worker threads (0: all cores)");
  cmd->add_option("--format", c.format, "trajectory format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--init", c.init_text, "initial state, e.g. \"OFF temp=22 out=16\"");
}

// structured error on stderr, returns code
int fail(std::ostream& err, int code, const std::string& kind, const std::string& msg, json extra = json::object()) {
  json j{{"error", kind}, {"message", msg}, {"exit_code", code}};
  for (auto& [k, v] : extra.items()) j[k] = v;
  err << j.dump() << '\n';
  return code;
}

struct Loaded {
  RunSource src;
  ArtifactStamp stamp;
};

// settings after command-line overrides; the hash covers the canonical text
// of the system plus the overrides so artifacts are traceable
Loaded load(const Common& c) {
  Loaded l;
  l.src = resolve_source(c.system_id, c.config_path);
  auto& s = l.src.bundle.settings;
  if (c.horizon > 0) s.set("horizon", c.horizon);
  if (c.switches > 0) s.set("switches", c.switches);
  if (c.restarts > 0) s.set("restarts", c.restarts);
  if (c.epsilon > 0) s.set("epsilon", c.epsilon);
  if (c.delta > 0) s.set("delta", c.delta);
  if (c.threads >= 0) s.set("threads", c.threads);
  l.src.canonical_text = write_config(l.src.bundle);
  l.src.hash = config_hash(l.src.canonical_text);
  l.stamp = {c.seed, l.src.hash};
  return l;
}

json diagnostics_json(const std::vector<Diagnostic>& ds) {
  json a = json::array();
  for (const auto& d : ds) a.push_back({{"code", d.code}, {"message", d.message}});
  return a;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

HybridState default_init(const MultimodalSystem& sys) {
  if (!sys.init.states.empty()) return sys.init.states.front();
  if (sys.init.finite()) {
    auto all = sys.init.enumerate();
    if (!all.empty()) return all.front();
  }
  std::mt19937_64 rng(0);
  return sys.init.draw(rng);
}

std::string seq_names(const MultimodalSystem& sys, const std::vector<int>& seq) {
  std::string s;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) s += ',';
    s += sys.modes[static_cast<std::size_t>(seq[i])];
  }
  return s;
}

void write_trajectory(const fs::path& base, const std::string& format, const ExtendedTrajectory& traj,
                      const SystemBundle& b, const ArtifactStamp& stamp) {
  if (format == "json") write_file(base.string() + ".json", trajectory_json(traj, b.system, b.metric, stamp).dump(1) + "\n");
  else write_file(base.string() + ".csv", trajectory_csv(traj, b.system, b.metric, stamp));
}

int cmd_synthesize(const Common& c, bool no_timestamp, bool strict, int max_inits, std::ostream& out,
                   std::ostream& err) {
  Loaded l = load(c);
  auto& b = l.src.bundle;
  if (strict) b.settings.set("strict", 1);
  if (max_inits > 0) b.settings.set("max_inits", max_inits);
  const auto diags = validate_system(b.system, b.metric);
  if (!diags.empty())
    return fail(err, kExitValidation, "validation", diags.front().message, {{"diagnostics", diagnostics_json(diags)}});

  const ObjectiveConfig obj = objective_config(b.settings);
  const SimplexConfig simplex = simplex_config(b.settings, c.seed);
  const SynthesisOptions opts = synthesis_options(b.system, b.settings, c.seed);
  SynthesisResult res;
  try {
    res = synthesize_logic(b.system, b.metric, obj, simplex, opts);
  } catch (const std::invalid_argument& e) {
    return fail(err, kExitValidation, "validation", e.what());
  }

  fs::create_directories(c.out_dir);
  json report = synthesis_report(b.system, res, opts);
  report["seed"] = c.seed;
  report["config_hash"] = l.stamp.config_hash;
  if (!no_timestamp) report["generated_at"] = now_iso();
  write_file(fs::path(c.out_dir) / "guards.json", report.dump(2) + "\n");

  std::ostringstream csv;
  csv << "# seed=" << c.seed << " config=" << l.stamp.config_hash << '\n';
  csv << "index,mode";
  for (const auto& v : b.system.variables) csv << ',' << v.name;
  csv << ",feasible,F,cost,residual_d,cycle,schedule\n";
  std::size_t feasible = 0;
  for (std::size_t i = 0; i < res.inits.size(); ++i) {
    const auto& io = res.inits[i];
    csv << i << ',' << b.system.modes[static_cast<std::size_t>(io.init.mode)];
    for (double v : io.init.x) csv << ',' << format_number(v);
    if (io.feasible) {
      ++feasible;
      const auto& ev = io.extraction.eval;
      std::string sched;
      for (double p : params_from_schedule(schedule_from_params(io.opt.best_point))) {
        if (!sched.empty()) sched += ' ';
        sched += format_number(p);
      }
      csv << ",1," << format_number(ev.F) << ',' << format_number(ev.cost) << ',' << format_number(ev.distance)
          << ",\"" << seq_names(b.system, io.extraction.cycle) << "\",\"" << sched << "\"\n";
      write_trajectory(fs::path(c.out_dir) / ("trajectory_" + std::to_string(i)), c.format, ev.trajectory, b, l.stamp);
    } else {
      csv << ",0,,,,,\n";
    }
  }
  write_file(fs::path(c.out_dir) / "optima.csv", csv.str());

  for (const auto& g : res.guards)
    out << b.system.modes[static_cast<std::size_t>(g.from)] << " -> " << b.system.modes[static_cast<std::size_t>(g.to)]
        << " : " << g.inequality << (g.separable ? "" : "   (not separable)") << '\n';
  for (const auto& w : res.warnings) err << "warning: " << w << '\n';

  if (feasible == 0) return fail(err, kExitOptimization, "optimization-failed", "no initial state reached a feasible schedule");
  if (res.guards.empty() || (strict && !res.failures.empty()))
    return fail(err, kExitLearning, "learning-failed", res.failures.empty() ? "no guard learned" : res.failures.front(),
                {{"failures", res.failures}});
  return kExitOk;
}

int cmd_simulate(const Common& c, const std::string& guards_path, const std::string& schedule_text, bool reference,
                 std::ostream& out, std::ostream& err) {
  Loaded l = load(c);
  const auto& b = l.src.bundle;
  const auto diags = validate_system(b.system, b.metric);
  if (!diags.empty())
    return fail(err, kExitValidation, "validation", diags.front().message, {{"diagnostics", diagnostics_json(diags)}});
  const int sources = static_cast<int>(!guards_path.empty()) + static_cast<int>(!schedule_text.empty()) +
                      static_cast<int>(reference);
  if (sources != 1) return fail(err, kExitUsage, "usage", "give exactly one of --guards, --schedule, --reference");

  const HybridState init = c.init_text.empty() ? default_init(b.system) : parse_hybrid_state(b.system, c.init_text);
  const double horizon = b.settings.get("horizon", 10.0);
  const SimOptions sim = sim_options(b.settings);
  fs::create_directories(c.out_dir);
  const fs::path base = fs::path(c.out_dir) / "trajectory";

  ExtendedTrajectory traj;
  int code = kExitOk;
  if (!schedule_text.empty()) {
    const ObjectiveConfig obj = objective_config(b.settings);
    const auto seq = obj.base_sequence.empty() ? supersequence(static_cast<int>(b.system.num_modes()), obj.k, init.mode)
                                               : obj.base_sequence;
    const auto nums = parse_number_list(schedule_text);
    if (nums.size() != seq.size() + 1)
      return fail(err, kExitUsage, "usage", "schedule needs " + std::to_string(seq.size() + 1) + " numbers (t1..tS tp tP)");
    DwellSchedule ds{{nums.begin(), nums.end() - 2}, nums[nums.size() - 2], nums.back()};
    try {
      const auto red = nz_reduce(seq, ds, obj.zero_dwell);
      std::vector<double> times(red.times.begin(), red.times.end());
      traj = simulate_scheduled(b.system, b.metric, init, red.modes, times, std::max(horizon, red.tP), sim);
    } catch (const DivergenceError& e) {
      return fail(err, kExitDiverged, "simulation-diverged", e.what());
    } catch (const std::exception& e) {
      return fail(err, kExitUsage, "usage", e.what());
    }
  } else {
    SwitchingLogic logic;
    if (reference) {
      if (c.system_id.empty()) return fail(err, kExitUsage, "usage", "--reference needs --system");
      logic = load_named(c.system_id).reference_logic();
    } else {
      std::ifstream f(guards_path);
      if (!f) return fail(err, kExitUsage, "usage", "cannot read " + guards_path);
      logic = logic_from_report(b.system, json::parse(f));
    }
    GuardedRun run;
    try {
      simulate_guarded(b.system, b.metric, logic, init, horizon, sim, run);
    } catch (const ZenoError& e) {
      code = fail(err, kExitDiverged, "zeno-suspect", e.what(), {{"time", e.time}});
    } catch (const DivergenceError& e) {
      code = fail(err, kExitDiverged, "simulation-diverged", e.what(), {{"last_good_time", e.last_good_time}});
    }
    for (const auto& w : run.warnings) err << "warning: " << w << '\n';
    traj = std::move(run.trajectory);
  }

  write_trajectory(base, c.format, traj, b, l.stamp);
  if (code != kExitOk) return code;

  json cost{{"seed", c.seed}, {"config_hash", l.stamp.config_hash}, {"horizon", traj.horizon()}};
  try {
    cost["longrun_estimate"] = longrun_cost_estimate(traj, b.metric, 0.5);
  } catch (const std::exception& e) {
    cost["longrun_estimate"] = nullptr;
    cost["longrun_error"] = e.what();
  }
  const auto [t1, t2] = detect_period(traj, b.system, 1e-4);
  if (t2 > t1) {
    try {
      cost["period"] = {{"t1", t1}, {"t2", t2}, {"segment_cost", segment_cost(traj, b.metric, t1, t2).segment_cost}};
    } catch (const std::exception&) {
      cost["period"] = nullptr;
    }
  } else {
    cost["period"] = nullptr;
  }
  write_file(fs::path(c.out_dir) / "cost.json", cost.dump(2) + "\n");
  out << cost.dump() << '\n';
  return kExitOk;
}

int cmd_evaluate(const Common& c, const std::string& schedule_text, const std::string& schedule_file,
                 std::ostream& out, std::ostream& err) {
  Loaded l = load(c);
  const auto& b = l.src.bundle;
  std::string text = schedule_text;
  if (!schedule_file.empty()) {
    std::ifstream f(schedule_file);
    if (!f) return fail(err, kExitUsage, "usage", "cannot read " + schedule_file);
    std::stringstream ss;
    ss << f.rdbuf();
    text = ss.str();
  }
  if (text.empty()) return fail(err, kExitUsage, "usage", "no schedule given");
  std::vector<double> nums;
  HybridState init;
  try {
    nums = parse_number_list(text);
    init = c.init_text.empty() ? default_init(b.system) : parse_hybrid_state(b.system, c.init_text);
  } catch (const std::exception& e) {
    return fail(err, kExitUsage, "parse", e.what());
  }
  const ObjectiveConfig obj = objective_config(b.settings);
  const auto seq = obj.base_sequence.empty() ? supersequence(static_cast<int>(b.system.num_modes()), obj.k, init.mode)
                                             : obj.base_sequence;
  if (nums.size() != seq.size() + 1)
    return fail(err, kExitUsage, "parse", "schedule needs " + std::to_string(seq.size() + 1) + " numbers (t1..tS tp tP)");
  DwellSchedule ds{{nums.begin(), nums.end() - 2}, nums[nums.size() - 2], nums.back()};
  const Evaluation ev = evaluate_F_detailed(b.system, b.metric, init, seq, ds, obj);
  out << "F = " << format_number(ev.F) << '\n';
  if (!ev.reduced.modes.empty()) out << "sequence = " << seq_names(b.system, ev.reduced.modes) << '\n';
  if (ev.feasible) out << "cost = " << format_number(ev.cost) << "\nresidual_d = " << format_number(ev.distance) << '\n';
  else out << "reason = " << ev.reason << '\n';
  return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"switching logic synthesis"};
  app.require_subcommand(1);
  Common syn_c, sim_c, ev_c;
  bool no_timestamp = false, strict = false, reference = false, list = false;
  int max_inits = 0;
  std::string guards_path, sim_schedule, ev_schedule, ev_schedule_file;

  auto* syn = app.add_subcommand("synthesize", "optimize from sampled initial states and learn guards");
  add_common(syn, syn_c);
  syn->add_flag("--no-timestamp", no_timestamp, "leave generated_at out of guards.json");
  syn->add_flag("--strict", strict, "fail on any non-separable mode pair");
  syn->add_option("--max-inits", max_inits, "cap on optimized initial states");

  auto* sim = app.add_subcommand("simulate", "run guards or a schedule and report cost");
  add_common(sim, sim_c);
  sim->add_option("--guards", guards_path, "guards.json from synthesize");
  sim->add_option("--schedule", sim_schedule, "switch times t1..tS tp tP");
  sim->add_flag("--reference", reference, "use the built-in reference guards");

  auto* ev = app.add_subcommand("evaluate", "print F for one schedule");
  add_common(ev, ev_c);
  ev->add_option("--schedule", ev_schedule, "switch times t1..tS tp tP");
  ev->add_option("--schedule-file", ev_schedule_file, "file holding the schedule");

  auto* ls = app.add_subcommand("systems", "list built-in systems");
  ls->add_flag("--export", list, "print each as a config document");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (syn->parsed()) return cmd_synthesize(syn_c, no_timestamp, strict, max_inits, out, err);
    if (sim->parsed()) return cmd_simulate(sim_c, guards_path, sim_schedule, reference, out, err);
    if (ev->parsed()) return cmd_evaluate(ev_c, ev_schedule, ev_schedule_file, out, err);
    for (const auto& id : named_system_ids()) {
      if (list) out << "# ---- " << id << '\n' << write_config(load_named(id).bundle) << '\n';
      else out << id << '\n';
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    return fail(err, kExitValidation, "validation", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(err, kExitValidation, "validation", e.what());
  } catch (const std::exception& e) {
    return fail(err, kExitUsage, "error", e.what());
  }
}

} // namespace optswitch

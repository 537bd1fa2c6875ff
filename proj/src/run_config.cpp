#include "optswitch/run_config.hpp"

#include <cmath>
#include <stdexcept>

#include "optswitch/systems.hpp"

namespace optswitch {

namespace {
int as_int(const Settings& s, std::string_view key, int fallback) {
  return static_cast<int>(std::lround(s.get(key, fallback)));
}
} // namespace

SimOptions sim_options(const Settings& s) {
  SimOptions o;
  o.step = s.get("step", o.step);
  o.error_tol = s.get("error_tol", o.error_tol);
  o.max_halvings = as_int(s, "max_halvings", o.max_halvings);
  o.state_bound = s.get("state_bound", o.state_bound);
  o.event_tol = s.get("event_tol", o.event_tol);
  o.eq_tol = s.get("eq_tol", o.eq_tol);
  o.max_switches = as_int(s, "max_switches", o.max_switches);
  o.switch_window = s.get("switch_window", o.switch_window);
  return o;
}

ObjectiveConfig objective_config(const Settings& s) {
  ObjectiveConfig c;
  c.M = s.get("M", c.M);
  c.sentinel = s.get("sentinel", c.sentinel);
  c.k = as_int(s, "switches", c.k);
  c.zero_dwell = s.get("zero_dwell", c.zero_dwell);
  c.eq_tol = s.get("eq_tol", c.eq_tol);
  c.max_horizon = s.get("max_horizon", c.max_horizon);
  c.min_window = s.get("min_window", c.min_window);
  c.snap_equalities = s.get("snap", 1.0) != 0.0;
  c.sim = sim_options(s);
  return c;
}

SimplexConfig simplex_config(const Settings& s, std::uint64_t seed) {
  SimplexConfig c;
  c.restarts = as_int(s, "restarts", c.restarts);
  c.polish = as_int(s, "polish", c.polish);
  c.max_iters = as_int(s, "max_iters", c.max_iters);
  c.max_fn_evals = as_int(s, "max_evals", c.max_fn_evals);
  c.x_tol = s.get("x_tol", c.x_tol);
  c.f_tol = s.get("f_tol", c.f_tol);
  c.threads = as_int(s, "threads", c.threads);
  c.rng_seed = seed;
  return c;
}

Bounds schedule_bounds(const Settings& s, std::size_t num_modes) {
  const int k = as_int(s, "switches", 2);
  const std::size_t S = num_modes * static_cast<std::size_t>(std::max(k, 0));
  Bounds b;
  // negative dwells clamp to zero, so a box reaching below 0 lets starts
  // drop modes from the supersequence
  const double dwell = s.get("bound_dwell", 10.0);
  b.lo.assign(S, -s.get("dwell_lo_fraction", 0.25) * dwell);
  b.lo.push_back(0.0);
  b.lo.push_back(0.0);
  b.hi.assign(S, dwell);
  b.hi.push_back(s.get("bound_tp", 10.0));
  b.hi.push_back(s.get("bound_rep", 10.0));
  return b;
}

SynthesisOptions synthesis_options(const MultimodalSystem& sys, const Settings& s, std::uint64_t seed) {
  SynthesisOptions o;
  o.pac.epsilon = s.get("epsilon", o.pac.epsilon);
  o.pac.delta = s.get("delta", o.pac.delta);
  o.pac.log_base = s.get("log_base", o.pac.log_base);
  o.max_inits = static_cast<std::size_t>(std::max(0, as_int(s, "max_inits", 0)));
  o.negatives_window = s.get("negatives_window", o.negatives_window);
  o.negatives_count = as_int(s, "negatives_count", o.negatives_count);
  o.max_passes = as_int(s, "max_passes", o.max_passes);
  o.screen_probes = as_int(s, "screen_probes", o.screen_probes);
  o.consistency_tol = s.get("consistency_tol", o.consistency_tol);
  o.strict_separable = s.get("strict", 0.0) != 0.0;
  o.bounds = schedule_bounds(s, sys.num_modes());
  o.seed = seed;
  o.threads = as_int(s, "threads", 0);
  return o;
}

RunSource resolve_source(const std::string& system_id, const std::string& config_path) {
  if (system_id.empty() == config_path.empty())
    throw std::invalid_argument("give exactly one of --system or --config");
  RunSource src;
  if (!system_id.empty()) {
    src.bundle = load_named(system_id).bundle;
  } else {
    src.bundle = load_config_file(config_path);
  }
  src.canonical_text = write_config(src.bundle);
  src.hash = config_hash(src.canonical_text);
  return src;
}

} // namespace optswitch

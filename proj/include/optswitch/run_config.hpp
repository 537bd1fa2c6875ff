#pragma once

#include <cstdint>
#include <string>

#include "optswitch/config_format.hpp"
#include "optswitch/guard_learning.hpp"
#include "optswitch/objective.hpp"
#include "optswitch/optimizer.hpp"
#include "optswitch/simulator.hpp"

namespace optswitch {

/// Settings keys understood by the converters below (all optional):
///   step error_tol max_halvings state_bound event_tol eq_tol max_switches switch_window
///   M sentinel switches zero_dwell max_horizon snap
///   restarts polish max_iters max_evals x_tol f_tol threads
///   bound_dwell dwell_lo_fraction bound_tp bound_rep epsilon delta max_inits
///   negatives_window negatives_count max_passes strict screen_probes consistency_tol horizon
SimOptions sim_options(const Settings& s);
ObjectiveConfig objective_config(const Settings& s);
SimplexConfig simplex_config(const Settings& s, std::uint64_t seed);

/// Box for (dwell_1..dwell_S, tp, tP - tp) with S = N*k switches. Dwells start
/// at -dwell_lo_fraction * bound_dwell, tp and the window at 0.
Bounds schedule_bounds(const Settings& s, std::size_t num_modes);

SynthesisOptions synthesis_options(const MultimodalSystem& sys, const Settings& s, std::uint64_t seed);

/// A resolved system: exactly one of a named id or a config path.
struct RunSource {
  SystemBundle bundle;
  std::string canonical_text;  // write_config(bundle), what the hash covers
  std::string hash;
};

/// Throws std::invalid_argument on an unknown id, ConfigError on bad text.
RunSource resolve_source(const std::string& system_id, const std::string& config_path);

} // namespace optswitch

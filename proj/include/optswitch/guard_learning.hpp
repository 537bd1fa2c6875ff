#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "optswitch/model.hpp"
#include "optswitch/objective.hpp"
#include "optswitch/optimizer.hpp"
#include "optswitch/simulator.hpp"

namespace optswitch {

struct PacConfig {
  double epsilon = 0.1;
  double delta = 0.05;
  int n = 1;               // ambient dimension; VC dimension is n + 1
  double log_base = 2.0;

  bool valid() const { return epsilon > 0 && epsilon < 1 && delta > 0 && delta < 1 && n >= 0 && log_base > 1; }
};

/// ceil(max(4/eps log(2/delta), (8n+8)/eps log(13/eps)))
long pac_sample_size(const PacConfig& cfg);

struct LabeledPoint {
  std::vector<double> x;
  int label = 1; // +1 or -1
};

struct LabeledSample {
  std::vector<LabeledPoint> points;
  std::size_t positives() const;
  std::size_t negatives() const;
};

/// { x : theta . x + theta0 >= 0 }
struct HalfspaceGuard {
  std::vector<double> theta;
  double theta0 = 0.0;

  double margin(std::span<const double> x) const;
  bool contains(std::span<const double> x) const { return margin(x) >= 0.0; }
};

class NonSeparableError : public std::runtime_error {
public:
  NonSeparableError(const std::string& what, long misclassified, HalfspaceGuard pocket)
      : std::runtime_error(what), misclassified(misclassified), pocket(std::move(pocket)) {}
  long misclassified;
  HalfspaceGuard pocket; // fewest training errors seen
};

struct PerceptronResult {
  HalfspaceGuard guard;
  long updates = 0;
};

/// Mistake-driven perceptron, always correcting the lowest-index misclassified
/// point. With `normalize` each feature is mapped affinely to [-1, 1] first and
/// the halfspace mapped back afterwards. Given `widths` (one positive span per
/// feature, e.g. the declared variable ranges) the per-feature scales keep those
/// proportions instead. Budget is max_passes * |sample| updates.
PerceptronResult perceptron_learn(const LabeledSample& sample, int max_passes, bool normalize = true,
                                  std::span<const double> widths = {});

long training_errors(const HalfspaceGuard& g, const LabeledSample& sample);

struct SynthesisOptions {
  PacConfig pac;
  std::size_t max_inits = 0;          // 0: no cap
  double negatives_window = 0.5;      // fraction of the preceding dwell
  int negatives_count = 10;
  int max_passes = 1000;
  bool strict_separable = false;      // false: keep the pocket halfspace and flag it
  Bounds bounds;                      // over the schedule parameter vector
  std::vector<std::vector<double>> starts; // first NM starting points, topped up from screening
  int screen_probes = 256;            // random schedules tried before the simplex runs
  double consistency_tol = 0.005;     // relative F gap that marks a failed search; 0 disables
  std::uint64_t seed = 0;
  int threads = 0;
};

struct InitOutcome {
  HybridState init;
  OptimizationResult opt;
  Extraction extraction;   // valid when feasible
  bool feasible = false;
  bool excluded = false;   // optimum clearly worse than another init with the same parameters
  std::string error;
  std::vector<int> base_sequence;
};

struct LearnedGuard {
  int from = 0;
  int to = 0;
  std::vector<double> partition;   // parameter values this halfspace is conditioned on
  HalfspaceGuard halfspace;        // full-dimensional, zero on parameters and clocks
  std::size_t positives = 0;
  std::size_t negatives = 0;
  long training_error = 0;
  long updates = 0;
  bool separable = true;
  std::string inequality;
};

struct SynthesisResult {
  SwitchingLogic logic;
  std::vector<LearnedGuard> guards;
  std::vector<InitOutcome> inits;
  std::vector<std::string> warnings;
  std::vector<std::string> failures;   // mode pairs that could not be learned
  long pac_size = 0;
  std::size_t feature_dim = 0;
};

/// Indices of the variables the halfspaces are learned over.
std::vector<std::size_t> feature_indices(const MultimodalSystem& sys);
std::vector<std::size_t> parameter_indices(const MultimodalSystem& sys);

/// Initial states the synthesis would optimize from.
std::vector<HybridState> select_initial_states(const MultimodalSystem& sys, const SynthesisOptions& opts,
                                               long pac_size);

/// Optimize from one initial state and extract its switching states.
InitOutcome optimize_initial_state(const MultimodalSystem& sys, const PerformanceMetric& metric,
                                   const HybridState& init, const ObjectiveConfig& obj,
                                   const SimplexConfig& simplex, const SynthesisOptions& opts);

SynthesisResult synthesize_logic(const MultimodalSystem& sys, const PerformanceMetric& metric,
                                 const ObjectiveConfig& obj, const SimplexConfig& simplex,
                                 const SynthesisOptions& opts);

/// Learn guards from already optimized initial states.
SynthesisResult learn_guards(const MultimodalSystem& sys, std::vector<InitOutcome> inits,
                             const SynthesisOptions& opts);

/// JSON report: guards, per-initial-state costs and residuals, PAC numbers.
nlohmann::json synthesis_report(const MultimodalSystem& sys, const SynthesisResult& res,
                                const SynthesisOptions& opts);

/// Rebuild a logic from a report written by synthesis_report.
SwitchingLogic logic_from_report(const MultimodalSystem& sys, const nlohmann::json& report);

} // namespace optswitch

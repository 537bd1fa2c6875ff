#pragma once

#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "optswitch/model.hpp"
#include "optswitch/simulator.hpp"

namespace optswitch {

class DegenerateScheduleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ObjectiveConfig {
  double M = 1000.0;
  double sentinel = 2000.0;
  int k = 2;                       // supersequence repetitions
  std::vector<int> base_sequence;  // empty: derived from k and the initial mode
  double zero_dwell = 1e-4;
  double eq_tol = kDefaultEqualityTolerance;
  double max_horizon = std::numeric_limits<double>::infinity();
  /// Windows shorter than this are rejected: a short enough window makes the
  /// recurrence distance vanish for any trajectory, periodic or not.
  double min_window = 0.0;
  bool snap_equalities = true;     // move switches onto equality over-approximations
  SimOptions sim;
};

/// q0, (q0+1 ... q0+N-1, q0)^k with indices mod N: the supersequence
/// 1(2...N 1)^k rotated to start at `start`.
std::vector<int> supersequence(int num_modes, int k, int start = 0);

struct DwellSchedule {
  std::vector<double> raw_times; // t1 ... t_S
  double tp = 0.0;
  double tP = 0.0;
};

/// (dwell_1..dwell_S, tp, tP - tp) -> schedule; negatives clamp to 0.
DwellSchedule schedule_from_params(std::span<const double> params);
std::vector<double> params_from_schedule(const DwellSchedule& s);

struct ReducedSchedule {
  std::vector<int> modes;
  std::vector<double> times;
  double tp = 0.0;
  double tP = 0.0;
};

/// Drop modes whose dwell is below eps (times first clamped to tP), merge
/// equal neighbours. Throws DegenerateScheduleError if nothing survives.
ReducedSchedule nz_reduce(std::span<const int> base_seq, const DwellSchedule& sched, double eps);

/// Squared distance over variables marked in_distance, clocks taken modulo
/// their period; `sentinel` when modes differ.
double hybrid_distance(const MultimodalSystem& sys, const HybridState& a, const HybridState& b, double sentinel);

struct Evaluation {
  double F = 0.0;
  bool feasible = false;
  std::string reason;           // why F is the sentinel
  ReducedSchedule reduced;      // after snapping
  double cost = 0.0;
  double distance = 0.0;        // d(qx(tp), qx(tP)), unweighted
  ExtendedTrajectory trajectory;
};

/// Total: every input yields a finite value, failures collapse to cfg.sentinel.
Evaluation evaluate_F_detailed(const MultimodalSystem& sys, const PerformanceMetric& metric,
                               const HybridState& init, std::span<const int> base_seq,
                               const DwellSchedule& sched, const ObjectiveConfig& cfg);
double evaluate_F(const MultimodalSystem& sys, const PerformanceMetric& metric, const HybridState& init,
                  std::span<const int> base_seq, const DwellSchedule& sched, const ObjectiveConfig& cfg);

struct SwitchingState {
  int from = 0;
  int to = 0;
  double t = 0.0;
  std::vector<double> x;
  bool in_cycle = false;
};

struct Extraction {
  std::vector<SwitchingState> switches;
  std::vector<int> cycle;  // modes entered by the switches in [tp, tP], one repetition
  Evaluation eval;
};

/// Throws std::runtime_error if the schedule is infeasible.
Extraction extract_switching_states(const MultimodalSystem& sys, const PerformanceMetric& metric,
                                    const HybridState& init, std::span<const int> base_seq,
                                    const DwellSchedule& sched, const ObjectiveConfig& cfg,
                                    double dedupe_tol = 1e-3);

} // namespace optswitch

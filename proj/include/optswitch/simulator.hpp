#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "optswitch/model.hpp"

namespace optswitch {

class SimulationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// State norm left the configured bound or went non-finite.
class DivergenceError : public SimulationError {
public:
  DivergenceError(const std::string& what, double last_good_time)
      : SimulationError(what), last_good_time(last_good_time) {}
  double last_good_time;
};

class ZenoError : public SimulationError {
public:
  ZenoError(const std::string& what, double at) : SimulationError(what), time(at) {}
  double time;
};

class DegenerateRewardError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct SimOptions {
  double step = 1e-3;
  double error_tol = 1e-6;   // local error proxy, relative to 1 + |x|
  int max_halvings = 12;
  double state_bound = 1e9;
  // guarded runs
  double event_tol = 1e-9;
  double eq_tol = kDefaultEqualityTolerance;
  int max_switches = 64;     // this many switches ...
  double switch_window = 0;  // ... within this much time is chattering; 0 means `step`
};

struct SwitchEvent {
  double t = 0.0;
  int from = 0;
  int to = 0;
  std::vector<double> x;
};

/// Flat sample storage: sample i has time t[i], mode[i], and
/// width() doubles (x then pr) starting at data[i * width()].
class ExtendedTrajectory {
public:
  ExtendedTrajectory() = default;
  ExtendedTrajectory(std::size_t n, std::size_t m) : n_(n), m_(m) {}

  std::size_t dim() const { return n_; }
  std::size_t accumulators() const { return m_; }
  std::size_t width() const { return n_ + m_; }
  std::size_t size() const { return t_.size(); }
  bool empty() const { return t_.empty(); }

  double time(std::size_t i) const { return t_[i]; }
  int mode(std::size_t i) const { return mode_[i]; }
  std::span<const double> x(std::size_t i) const { return {data_.data() + i * width(), n_}; }
  std::span<const double> pr(std::size_t i) const { return {data_.data() + i * width() + n_, m_}; }
  double horizon() const { return t_.empty() ? 0.0 : t_.back(); }

  void push(double t, int mode, std::span<const double> x, std::span<const double> pr);
  void reserve(std::size_t k);

  std::vector<SwitchEvent> switches;

  /// Linear interpolation between the last sample at or before `t` and the
  /// next one. At a switch instant this is the post-switch sample.
  struct Point {
    int mode = 0;
    std::vector<double> x;
    std::vector<double> pr;
  };
  Point at(double t) const;
  /// Index of the last sample with time <= t (0 if t precedes everything).
  std::size_t index_at(double t) const;

private:
  std::size_t n_ = 0, m_ = 0;
  std::vector<double> t_;
  std::vector<int> mode_;
  std::vector<double> data_;
};

/// Integrate mode_seq[j] on [t_j, t_{j+1}] with t_0 = 0 and a final segment to
/// `horizon`. `probes` are extra times the integrator lands on exactly.
ExtendedTrajectory simulate_scheduled(const MultimodalSystem& sys, const PerformanceMetric& metric,
                                      const HybridState& init, std::span<const int> mode_seq,
                                      std::span<const double> switch_times, double horizon,
                                      const SimOptions& opts = {}, std::span<const double> probes = {});

/// guards[from][to]; an empty region never fires.
struct SwitchingLogic {
  std::vector<std::vector<Region>> guards;

  static SwitchingLogic none(std::size_t modes);
  const Region& guard(int from, int to) const {
    return guards[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
  }
};

struct GuardedRun {
  ExtendedTrajectory trajectory;
  std::vector<std::string> warnings;
};

/// Switch as soon as an outgoing guard is reached; the crossing instant is
/// located by bisection. Throws DivergenceError / ZenoError; the partial
/// trajectory is lost in that case, use the `partial` overload to keep it.
GuardedRun simulate_guarded(const MultimodalSystem& sys, const PerformanceMetric& metric,
                            const SwitchingLogic& logic, const HybridState& init, double horizon,
                            const SimOptions& opts = {});
GuardedRun simulate_guarded(const MultimodalSystem& sys, const PerformanceMetric& metric,
                            const SwitchingLogic& logic, const HybridState& init, double horizon,
                            const SimOptions& opts, GuardedRun& partial);

struct CostReport {
  double segment_cost = 0.0;
  std::vector<std::pair<double, double>> per_term; // (dP_i, dR_i)
};

/// sum_i w_i (P_i(t2) - P_i(t1)) / (R_i(t2) - R_i(t1))
CostReport segment_cost(const ExtendedTrajectory& traj, const PerformanceMetric& metric, double t1,
                        double t2, double reward_tol = 1e-12);

/// segment_cost over the last `tail_fraction` of the horizon.
double longrun_cost_estimate(const ExtendedTrajectory& traj, const PerformanceMetric& metric,
                             double tail_fraction);

} // namespace optswitch

namespace optswitch {

/// Latest pair of switch events with the same mode pair whose states agree
/// within `tol` (squared distance over in-distance variables, clocks wrapped).
/// Returns {t1, t2} of that recurrence, or {0, 0} if none is found.
std::pair<double, double> detect_period(const ExtendedTrajectory& traj, const MultimodalSystem& sys,
                                        double tol = 1e-4);

} // namespace optswitch

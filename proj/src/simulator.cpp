#include "optswitch/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace optswitch {

void ExtendedTrajectory::push(double t, int mode, std::span<const double> x, std::span<const double> pr) {
  t_.push_back(t);
  mode_.push_back(mode);
  data_.insert(data_.end(), x.begin(), x.end());
  data_.insert(data_.end(), pr.begin(), pr.end());
}

void ExtendedTrajectory::reserve(std::size_t k) {
  t_.reserve(k);
  mode_.reserve(k);
  data_.reserve(k * width());
}

std::size_t ExtendedTrajectory::index_at(double t) const {
  auto it = std::upper_bound(t_.begin(), t_.end(), t);
  if (it == t_.begin()) return 0;
  return static_cast<std::size_t>(it - t_.begin()) - 1;
}

ExtendedTrajectory::Point ExtendedTrajectory::at(double t) const {
  Point p;
  if (t_.empty()) return p;
  const std::size_t i = index_at(t);
  p.mode = mode_[i];
  const double* a = data_.data() + i * width();
  std::vector<double> v(a, a + width());
  if (i + 1 < t_.size() && t_[i + 1] > t_[i] && t > t_[i]) {
    const double w = (t - t_[i]) / (t_[i + 1] - t_[i]);
    const double* b = a + width();
    for (std::size_t k = 0; k < width(); ++k) v[k] = a[k] + w * (b[k] - a[k]);
  }
  p.x.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n_));
  p.pr.assign(v.begin() + static_cast<std::ptrdiff_t>(n_), v.end());
  return p;
}

namespace {

// RK4 on the joint (x, pr) vector; pr flows depend on x only.
class Stepper {
public:
  Stepper(const MultimodalSystem& sys, const PerformanceMetric& metric, const SimOptions& opts)
      : sys_(sys), metric_(metric), opts_(opts), n_(sys.dim()), w_(sys.dim() + metric.size()),
        k1_(w_), k2_(w_), k3_(w_), k4_(w_), tmp_(w_) {}

  std::size_t width() const { return w_; }

  // y <- y(t + h), with step halving while the error proxy is too large
  void advance(int mode, double t, std::vector<double>& y, double h, int depth = 0) {
    std::vector<double>& out = scratch(depth);
    const double err = rk4(mode, t, y, h, out);
    double scale = 0.0;
    for (std::size_t i = 0; i < n_; ++i) scale = std::max(scale, std::fabs(y[i]));
    if (err > opts_.error_tol * (1.0 + scale) && depth < opts_.max_halvings && std::isfinite(err)) {
      advance(mode, t, y, h / 2, depth + 1);
      advance(mode, t + h / 2, y, h / 2, depth + 1);
      return;
    }
    y.swap(out);
  }

private:
  void deriv(int mode, double t, std::span<const double> y, std::span<double> dy) {
    const auto x = y.subspan(0, n_);
    sys_.field(mode, t, x, dy.subspan(0, n_));
    if (w_ > n_) metric_.flow(mode, t, x, dy.subspan(n_));
  }

  double rk4(int mode, double t, const std::vector<double>& y, double h, std::vector<double>& out) {
    deriv(mode, t, y, k1_);
    for (std::size_t i = 0; i < w_; ++i) tmp_[i] = y[i] + 0.5 * h * k1_[i];
    deriv(mode, t + 0.5 * h, tmp_, k2_);
    for (std::size_t i = 0; i < w_; ++i) tmp_[i] = y[i] + 0.5 * h * k2_[i];
    deriv(mode, t + 0.5 * h, tmp_, k3_);
    for (std::size_t i = 0; i < w_; ++i) tmp_[i] = y[i] + h * k3_[i];
    deriv(mode, t + h, tmp_, k4_);
    out.resize(w_);
    double err = 0.0;
    for (std::size_t i = 0; i < w_; ++i) {
      const double slope = (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]) / 6.0;
      out[i] = y[i] + h * slope;
      // midpoint rule disagreement, state part only
      if (i < n_) err = std::max(err, h * std::fabs(slope - k2_[i]));
    }
    return err;
  }

  std::vector<double>& scratch(int depth) {
    while (static_cast<int>(pool_.size()) <= depth) pool_.emplace_back(w_);
    return pool_[static_cast<std::size_t>(depth)];
  }

  const MultimodalSystem& sys_;
  const PerformanceMetric& metric_;
  const SimOptions& opts_;
  std::size_t n_, w_;
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
  std::deque<std::vector<double>> pool_;
};

void check_finite(std::span<const double> y, std::size_t n, double bound, double t_good) {
  double norm2 = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) throw DivergenceError("trajectory became non-finite", t_good);
    if (i < n) norm2 += y[i] * y[i];
  }
  if (std::sqrt(norm2) > bound) throw DivergenceError("state norm exceeded bound", t_good);
}

constexpr double kMaxSteps = 5e7;

// Integrate [t0, t1] in `mode`, pushing every step. Uniform substeps of at
// most opts.step so the result varies smoothly with the endpoints.
void integrate(Stepper& st, ExtendedTrajectory& traj, int mode, double t0, double t1,
               std::vector<double>& y, const SimOptions& opts, std::size_t n) {
  if (!(t1 > t0)) return;
  const double span = t1 - t0;
  const double steps_real = std::ceil(span / opts.step - 1e-9);
  if (steps_real > kMaxSteps) throw SimulationError("integration interval needs too many steps");
  const auto steps = std::max<long>(1, static_cast<long>(steps_real));
  const double dt = span / static_cast<double>(steps);
  double t = t0;
  for (long k = 0; k < steps; ++k) {
    st.advance(mode, t, y, dt);
    const double next = k + 1 == steps ? t1 : t0 + static_cast<double>(k + 1) * dt;
    check_finite(y, n, opts.state_bound, t);
    t = next;
    traj.push(t, mode, std::span<const double>(y).subspan(0, n), std::span<const double>(y).subspan(n));
  }
}

} // namespace

ExtendedTrajectory simulate_scheduled(const MultimodalSystem& sys, const PerformanceMetric& metric,
                                      const HybridState& init, std::span<const int> mode_seq,
                                      std::span<const double> switch_times, double horizon,
                                      const SimOptions& opts, std::span<const double> probes) {
  const std::size_t n = sys.dim();
  const std::size_t m = metric.size();
  if (mode_seq.size() != switch_times.size() + 1)
    throw std::invalid_argument("mode sequence must be one longer than the switch list");
  if (init.x.size() != n) throw std::invalid_argument("initial state has wrong dimension");
  for (std::size_t i = 0; i < switch_times.size(); ++i) {
    if (!std::isfinite(switch_times[i]) || switch_times[i] < 0.0)
      throw std::invalid_argument("switch times must be finite and nonnegative");
    if (i > 0 && switch_times[i] < switch_times[i - 1])
      throw std::invalid_argument("switch times must be nondecreasing");
  }
  if (!std::isfinite(horizon) || (!switch_times.empty() && horizon < switch_times.back()) || horizon < 0.0)
    throw std::invalid_argument("horizon must cover the last switch");
  for (int q : mode_seq)
    if (q < 0 || static_cast<std::size_t>(q) >= sys.num_modes()) throw std::invalid_argument("unknown mode in sequence");

  std::vector<double> marks(probes.begin(), probes.end());
  std::sort(marks.begin(), marks.end());

  ExtendedTrajectory traj(n, m);
  traj.reserve(static_cast<std::size_t>(std::min(1e6, horizon / opts.step)) + 2 * switch_times.size() + 8);
  std::vector<double> y(init.x);
  y.resize(n + m, 0.0);
  check_finite(y, n, opts.state_bound, 0.0);
  traj.push(0.0, mode_seq[0], std::span<const double>(y).subspan(0, n), std::span<const double>(y).subspan(n));

  Stepper st(sys, metric, opts);
  auto probe = marks.begin();
  double t = 0.0;
  for (std::size_t j = 0; j < mode_seq.size(); ++j) {
    const int q = mode_seq[j];
    const double end = j < switch_times.size() ? switch_times[j] : horizon;
    while (probe != marks.end() && *probe <= t) ++probe;
    while (probe != marks.end() && *probe < end) {
      integrate(st, traj, q, t, *probe, y, opts, n);
      t = *probe++;
    }
    integrate(st, traj, q, t, end, y, opts, n);
    t = end;
    if (j + 1 < mode_seq.size()) {
      const int next = mode_seq[j + 1];
      if (next == q) continue;
      traj.switches.push_back({t, q, next, std::vector<double>(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n))});
      metric.apply_update(q, next, t, std::span<const double>(y).subspan(0, n), std::span<double>(y).subspan(n));
      traj.push(t, next, std::span<const double>(y).subspan(0, n), std::span<const double>(y).subspan(n));
    }
  }
  return traj;
}

SwitchingLogic SwitchingLogic::none(std::size_t modes) {
  SwitchingLogic l;
  l.guards.assign(modes, std::vector<Region>(modes, Region::empty()));
  return l;
}

namespace {

// Has the segment from x0 to x1 reached this piece? Inequalities are checked
// at x1; equalities count as reached on a sign change too, so fast crossings
// of a hyperplane are not stepped over.
// `band` is how close x1 must be to count as on the hyperplane; a start already
// within eq_tol never counts as a crossing
bool reached(const ConvexRegion& piece, std::span<const double> x0, std::span<const double> x1, double eq_tol,
             double band) {
  for (const auto& c : piece.constraints) {
    const double v1 = c.value(x1);
    switch (c.relation) {
    case Relation::GreaterEqual:
      if (!(v1 >= 0.0)) return false;
      break;
    case Relation::LessEqual:
      if (!(v1 <= 0.0)) return false;
      break;
    case Relation::Equal: {
      if (std::fabs(v1) <= band) break;
      const double v0 = c.value(x0);
      if (std::fabs(v0) <= eq_tol || (v0 > 0) == (v1 > 0)) return false;
      break;
    }
    }
  }
  return true;
}

bool reached(const Region& r, std::span<const double> x0, std::span<const double> x1, double eq_tol,
             double band) {
  for (const auto& p : r.pieces())
    if (reached(p, x0, x1, eq_tol, band)) return true;
  return false;
}

} // namespace

GuardedRun simulate_guarded(const MultimodalSystem& sys, const PerformanceMetric& metric,
                            const SwitchingLogic& logic, const HybridState& init, double horizon,
                            const SimOptions& opts) {
  GuardedRun partial;
  return simulate_guarded(sys, metric, logic, init, horizon, opts, partial);
}

GuardedRun simulate_guarded(const MultimodalSystem& sys, const PerformanceMetric& metric,
                            const SwitchingLogic& logic, const HybridState& init, double horizon,
                            const SimOptions& opts, GuardedRun& run) {
  const std::size_t n = sys.dim();
  const std::size_t m = metric.size();
  const std::size_t N = sys.num_modes();
  if (init.x.size() != n) throw std::invalid_argument("initial state has wrong dimension");
  if (init.mode < 0 || static_cast<std::size_t>(init.mode) >= N) throw std::invalid_argument("unknown initial mode");
  if (logic.guards.size() != N) throw std::invalid_argument("switching logic has wrong shape");

  run = GuardedRun{};
  ExtendedTrajectory& traj = run.trajectory;
  traj = ExtendedTrajectory(n, m);
  traj.reserve(static_cast<std::size_t>(std::min(1e6, horizon / opts.step)) + 8);

  std::vector<double> y(init.x);
  y.resize(n + m, 0.0);
  int q = init.mode;
  double t = 0.0;
  const auto xs = [&](const std::vector<double>& v) { return std::span<const double>(v).subspan(0, n); };
  traj.push(t, q, xs(y), std::span<const double>(y).subspan(n));

  Stepper st(sys, metric, opts);
  const double window = opts.switch_window > 0 ? opts.switch_window : opts.step;
  std::deque<double> recent;

  auto do_switch = [&](std::vector<int>& targets) {
    if (targets.size() > 1) {
      std::string names;
      for (int r : targets) names += (names.empty() ? "" : ", ") + sys.modes[static_cast<std::size_t>(r)];
      run.warnings.push_back("t=" + format_number(t) + ": guards to " + names + " enabled together in " +
                             sys.modes[static_cast<std::size_t>(q)] + "; taking " +
                             sys.modes[static_cast<std::size_t>(targets.front())]);
    }
    const int next = targets.front();
    traj.switches.push_back({t, q, next, std::vector<double>(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n))});
    metric.apply_update(q, next, t, xs(y), std::span<double>(y).subspan(n));
    q = next;
    traj.push(t, q, xs(y), std::span<const double>(y).subspan(n));
    recent.push_back(t);
    while (!recent.empty() && recent.front() < t - window) recent.pop_front();
    if (static_cast<int>(recent.size()) >= opts.max_switches)
      throw ZenoError("chattering: " + std::to_string(recent.size()) + " switches within " +
                          format_number(window) + " time units (zeno suspect)",
                      t);
  };

  std::vector<double> y1(n + m), ymid(n + m);
  std::vector<int> targets;
  for (;;) {
    // enabled right now?
    targets.clear();
    for (std::size_t r = 0; r < N; ++r) {
      if (static_cast<int>(r) == q) continue;
      const Region& g = logic.guard(q, static_cast<int>(r));
      if (!g.is_empty() && g.contains(xs(y), opts.eq_tol)) targets.push_back(static_cast<int>(r));
    }
    if (!targets.empty()) {
      do_switch(targets);
      continue;
    }
    if (t >= horizon) break;

    const double h = std::min(opts.step, horizon - t);
    y1 = y;
    st.advance(q, t, y1, h);
    check_finite(y1, n, opts.state_bound, t);

    auto reached_within = [&](const std::vector<double>& to, double tol) {
      for (std::size_t r = 0; r < N; ++r) {
        if (static_cast<int>(r) == q) continue;
        const Region& g = logic.guard(q, static_cast<int>(r));
        if (!g.is_empty() && reached(g, xs(y), xs(to), opts.eq_tol, tol)) return true;
      }
      return false;
    };
    auto any_reached = [&](const std::vector<double>& to) { return reached_within(to, opts.eq_tol); };

    if (!any_reached(y1)) {
      y.swap(y1);
      t = (h == horizon - t) ? horizon : t + h;
      traj.push(t, q, xs(y), std::span<const double>(y).subspan(n));
      continue;
    }

    // first entry inside (t, t+h]. a hyperplane crossed within the step is
    // located by its sign change rather than the edge of the tolerance band
    const double band = reached_within(y1, 0.0) ? 0.0 : opts.eq_tol;
    double lo = 0.0, hi = h;
    while (hi - lo > opts.event_tol) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      ymid = y;
      st.advance(q, t, ymid, mid);
      if (reached_within(ymid, band)) hi = mid;
      else lo = mid;
    }
    ymid = y;
    st.advance(q, t, ymid, hi);
    check_finite(ymid, n, opts.state_bound, t);
    targets.clear();
    for (std::size_t r = 0; r < N; ++r) {
      if (static_cast<int>(r) == q) continue;
      const Region& g = logic.guard(q, static_cast<int>(r));
      if (!g.is_empty() && reached(g, xs(y), xs(ymid), opts.eq_tol, band)) targets.push_back(static_cast<int>(r));
    }
    y.swap(ymid);
    t += hi;
    traj.push(t, q, xs(y), std::span<const double>(y).subspan(n));
    if (!targets.empty()) do_switch(targets);
  }
  return run;
}

CostReport segment_cost(const ExtendedTrajectory& traj, const PerformanceMetric& metric, double t1,
                        double t2, double reward_tol) {
  if (!(t1 >= 0.0 && t1 < t2 && t2 <= traj.horizon() + 1e-12))
    throw std::invalid_argument("cost window must satisfy 0 <= t1 < t2 <= horizon");
  const auto a = traj.at(t1);
  const auto b = traj.at(t2);
  CostReport rep;
  for (std::size_t k = 0; k < metric.penalty_vars.size(); ++k) {
    const auto p = static_cast<std::size_t>(metric.penalty_vars[k]);
    const auto r = static_cast<std::size_t>(metric.reward_vars[k]);
    const double dp = b.pr[p] - a.pr[p];
    const double dr = b.pr[r] - a.pr[r];
    rep.per_term.emplace_back(dp, dr);
    if (!(std::fabs(dr) > reward_tol))
      throw DegenerateRewardError("reward '" + metric.accumulators[r].name + "' does not change over the window");
    const double w = k < metric.weights.size() ? metric.weights[k] : 1.0;
    rep.segment_cost += w * dp / dr;
  }
  return rep;
}

double longrun_cost_estimate(const ExtendedTrajectory& traj, const PerformanceMetric& metric,
                             double tail_fraction) {
  const double T = traj.horizon();
  if (!(T > 0.0)) throw std::invalid_argument("trajectory has zero horizon");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw std::invalid_argument("tail fraction must be in (0, 1]");
  return segment_cost(traj, metric, T * (1.0 - tail_fraction), T).segment_cost;
}

} // namespace optswitch

namespace optswitch {

std::pair<double, double> detect_period(const ExtendedTrajectory& traj, const MultimodalSystem& sys, double tol) {
  const auto& ev = traj.switches;
  auto close = [&](const SwitchEvent& a, const SwitchEvent& b) {
    if (a.from != b.from || a.to != b.to) return false;
    for (std::size_t i = 0; i < sys.dim(); ++i) {
      const Variable& v = sys.variables[i];
      if (!v.in_distance) continue;
      double diff = std::fabs(a.x[i] - b.x[i]);
      if (v.role == VariableRole::Clock && v.period > 0.0) {
        diff = std::fmod(diff, v.period);
        diff = std::min(diff, v.period - diff);
      }
      if (diff > tol) return false;
    }
    return true;
  };
  // latest event first, then its nearest earlier twin
  for (std::size_t j = ev.size(); j-- > 1;)
    for (std::size_t i = j; i-- > 0;)
      if (close(ev[i], ev[j]) && ev[j].t > ev[i].t) return {ev[i].t, ev[j].t};
  return {0.0, 0.0};
}

} // namespace optswitch

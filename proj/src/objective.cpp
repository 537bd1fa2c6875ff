#include "optswitch/objective.hpp"

#include <algorithm>
#include <cmath>

namespace optswitch {

std::vector<int> supersequence(int num_modes, int k, int start) {
  if (num_modes < 1) throw std::invalid_argument("need at least one mode");
  if (k < 0) throw std::invalid_argument("k must be nonnegative");
  std::vector<int> seq{start};
  for (int rep = 0; rep < k; ++rep)
    for (int i = 1; i <= num_modes; ++i) seq.push_back((start + i) % num_modes);
  return seq;
}

DwellSchedule schedule_from_params(std::span<const double> p) {
  if (p.size() < 2) throw std::invalid_argument("schedule vector needs at least tp and the repeat length");
  DwellSchedule s;
  const auto clamp = [](double v) { return v > 0.0 ? v : (std::isnan(v) ? v : 0.0); };
  double t = 0.0;
  for (std::size_t i = 0; i + 2 < p.size(); ++i) {
    t += clamp(p[i]);
    s.raw_times.push_back(t);
  }
  s.tp = clamp(p[p.size() - 2]);
  s.tP = s.tp + clamp(p[p.size() - 1]);
  return s;
}

std::vector<double> params_from_schedule(const DwellSchedule& s) {
  std::vector<double> p;
  double prev = 0.0;
  for (double t : s.raw_times) {
    p.push_back(t - prev);
    prev = t;
  }
  p.push_back(s.tp);
  p.push_back(s.tP - s.tp);
  return p;
}

ReducedSchedule nz_reduce(std::span<const int> base_seq, const DwellSchedule& sched, double eps) {
  const std::size_t S = sched.raw_times.size();
  if (base_seq.size() != S + 1) throw std::invalid_argument("base sequence must be one longer than the time list");
  std::vector<double> t(S + 2);
  t[0] = 0.0;
  for (std::size_t i = 0; i < S; ++i) t[i + 1] = std::min(sched.raw_times[i], sched.tP);
  t[S + 1] = sched.tP;

  ReducedSchedule out;
  out.tp = sched.tp;
  out.tP = sched.tP;
  std::vector<double> starts;
  for (std::size_t j = 0; j <= S; ++j) {
    const double dwell = t[j + 1] - t[j];
    if (!(dwell >= eps)) continue;
    if (!out.modes.empty() && out.modes.back() == base_seq[j]) continue; // merged run keeps its first start
    out.modes.push_back(base_seq[j]);
    starts.push_back(t[j]);
  }
  if (out.modes.empty()) throw DegenerateScheduleError("every dwell is zero");
  out.times.assign(starts.begin() + 1, starts.end());
  return out;
}

double hybrid_distance(const MultimodalSystem& sys, const HybridState& a, const HybridState& b, double sentinel) {
  if (a.mode != b.mode) return sentinel;
  double d = 0.0;
  for (std::size_t i = 0; i < sys.dim() && i < a.x.size() && i < b.x.size(); ++i) {
    const Variable& v = sys.variables[i];
    if (!v.in_distance) continue;
    double diff = a.x[i] - b.x[i];
    if (v.role == VariableRole::Clock && v.period > 0.0) {
      diff = std::fmod(std::fabs(diff), v.period);
      diff = std::min(diff, v.period - diff);
    }
    d += diff * diff;
  }
  return d;
}

namespace {

// Earliest time in (min_t, traj end] at which `region` is reached through one
// of its equality hyperplanes; negative if none.
double equality_crossing(const ExtendedTrajectory& traj, const Region& region, double min_t, double eq_tol,
                         std::vector<double>& x_at) {
  double best = -1.0;
  for (const auto& piece : region.pieces()) {
    const LinearConstraint* eq = nullptr;
    for (const auto& c : piece.constraints)
      if (c.relation == Relation::Equal) {
        eq = &c;
        break;
      }
    if (!eq) continue;
    double v_prev = eq->value(traj.x(0));
    for (std::size_t i = 1; i < traj.size(); ++i) {
      const double v = eq->value(traj.x(i));
      if (best >= 0.0 && traj.time(i - 1) >= best) break;
      const bool crossed = (v_prev < 0.0 && v >= 0.0) || (v_prev > 0.0 && v <= 0.0);
      if (crossed && traj.time(i) > min_t) {
        const double w = v_prev / (v_prev - v);
        const double tau = traj.time(i - 1) + w * (traj.time(i) - traj.time(i - 1));
        std::vector<double> x(traj.dim());
        const auto a = traj.x(i - 1);
        const auto b = traj.x(i);
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = a[k] + w * (b[k] - a[k]);
        if (tau > min_t && piece.contains(x, eq_tol)) {
          if (best < 0.0 || tau < best) {
            best = tau;
            x_at = std::move(x);
          }
          break;
        }
      }
      v_prev = v;
    }
  }
  return best;
}

bool has_equality(const Region& r) {
  for (const auto& p : r.pieces())
    if (p.has_equality()) return true;
  return false;
}

// Move switches whose over-approximation is an equality onto the crossing.
void snap_switches(const MultimodalSystem& sys, const PerformanceMetric& metric, const HybridState& init,
                   ReducedSchedule& rs, const ObjectiveConfig& cfg) {
  bool any = false;
  for (std::size_t j = 0; j + 1 < rs.modes.size(); ++j)
    any = any || has_equality(sys.over(rs.modes[j], rs.modes[j + 1]));
  if (!any) return;

  std::vector<double> x = init.x;
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < rs.modes.size(); ++j) {
    const int q = rs.modes[j];
    const Region& region = sys.over(q, rs.modes[j + 1]);
    const double dwell = rs.times[j] - s;
    const HybridState here{q, x};
    const int seq[] = {q};
    if (!has_equality(region)) {
      const auto tr = simulate_scheduled(sys, metric, here, seq, {}, dwell, cfg.sim);
      const auto xe = tr.x(tr.size() - 1);
      x.assign(xe.begin(), xe.end());
      s = rs.times[j];
      continue;
    }
    const double window = 2.0 * dwell + 50.0 * cfg.sim.step;
    const auto tr = simulate_scheduled(sys, metric, here, seq, {}, window, cfg.sim);
    std::vector<double> x_cross;
    const double tau = equality_crossing(tr, region, cfg.zero_dwell, cfg.eq_tol, x_cross);
    if (tau < 0.0) {
      const auto p = tr.at(dwell);
      x = p.x;
      s = rs.times[j];
      continue;
    }
    const double old = rs.times[j];
    const double delta = s + tau - old;
    for (std::size_t k = j; k < rs.times.size(); ++k) rs.times[k] += delta;
    if (rs.tp >= old) rs.tp += delta;
    if (rs.tP >= old) rs.tP += delta;
    x = std::move(x_cross);
    s = rs.times[j];
  }
}

Evaluation infeasible(const ObjectiveConfig& cfg, std::string why) {
  Evaluation e;
  e.F = cfg.sentinel;
  e.feasible = false;
  e.reason = std::move(why);
  return e;
}

} // namespace

Evaluation evaluate_F_detailed(const MultimodalSystem& sys, const PerformanceMetric& metric,
                               const HybridState& init, std::span<const int> base_seq,
                               const DwellSchedule& sched, const ObjectiveConfig& cfg) {
  // condition (a): ordering, and the window inside the horizon
  if (base_seq.size() != sched.raw_times.size() + 1) return infeasible(cfg, "base sequence length mismatch");
  if (!std::isfinite(sched.tp) || !std::isfinite(sched.tP)) return infeasible(cfg, "non-finite repetition times");
  for (std::size_t i = 0; i < sched.raw_times.size(); ++i) {
    const double ti = sched.raw_times[i];
    if (!std::isfinite(ti)) return infeasible(cfg, "non-finite switch time");
    if (ti < 0.0 || (i > 0 && ti < sched.raw_times[i - 1])) return infeasible(cfg, "switch times out of order");
  }
  if (!(sched.tp >= 0.0 && sched.tp < sched.tP)) return infeasible(cfg, "need 0 <= tp < tP");
  if (sched.tP > cfg.max_horizon) return infeasible(cfg, "tP beyond the horizon limit");
  if (sched.tP - sched.tp < cfg.min_window) return infeasible(cfg, "repetitive window shorter than min_window");

  ReducedSchedule rs;
  try {
    rs = nz_reduce(base_seq, sched, cfg.zero_dwell);
  } catch (const DegenerateScheduleError& e) {
    return infeasible(cfg, e.what());
  }
  if (rs.modes.front() != init.mode &&
      !sys.over(init.mode, rs.modes.front()).contains(init.x, cfg.eq_tol))
    return infeasible(cfg, "initial state outside the over-approximation of the implied first switch");

  Evaluation ev;
  try {
    if (cfg.snap_equalities) snap_switches(sys, metric, init, rs, cfg);
    if (rs.tP > cfg.max_horizon) return infeasible(cfg, "tP beyond the horizon limit");
    const double probes[] = {rs.tp, rs.tP};
    ev.trajectory = simulate_scheduled(sys, metric, HybridState{rs.modes.front(), init.x}, rs.modes, rs.times,
                                       rs.tP, cfg.sim, probes);
  } catch (const std::exception& e) {
    return infeasible(cfg, std::string("simulation: ") + e.what());
  }

  // condition (b)
  for (const auto& sw : ev.trajectory.switches) {
    if (!sys.over(sw.from, sw.to).contains(sw.x, cfg.eq_tol)) {
      auto bad = infeasible(cfg, "switch " + sys.modes[static_cast<std::size_t>(sw.from)] + " -> " +
                                     sys.modes[static_cast<std::size_t>(sw.to)] + " at t=" + format_number(sw.t) +
                                     " outside the guard over-approximation");
      bad.reduced = rs;
      return bad;
    }
  }

  try {
    ev.cost = segment_cost(ev.trajectory, metric, rs.tp, rs.tP).segment_cost;
  } catch (const std::exception& e) {
    return infeasible(cfg, std::string("cost: ") + e.what());
  }
  const auto a = ev.trajectory.at(rs.tp);
  const auto b = ev.trajectory.at(rs.tP);
  if (a.mode != b.mode) return infeasible(cfg, "modes at tp and tP differ");
  ev.distance = hybrid_distance(sys, {a.mode, a.x}, {b.mode, b.x}, cfg.sentinel);
  ev.reduced = std::move(rs);
  ev.F = ev.cost + cfg.M * ev.distance;
  if (!std::isfinite(ev.F) || ev.F >= cfg.sentinel) {
    ev.F = cfg.sentinel;
    ev.feasible = false;
    ev.reason = "value at or above the sentinel";
    return ev;
  }
  ev.feasible = true;
  return ev;
}

double evaluate_F(const MultimodalSystem& sys, const PerformanceMetric& metric, const HybridState& init,
                  std::span<const int> base_seq, const DwellSchedule& sched, const ObjectiveConfig& cfg) {
  return evaluate_F_detailed(sys, metric, init, base_seq, sched, cfg).F;
}

Extraction extract_switching_states(const MultimodalSystem& sys, const PerformanceMetric& metric,
                                    const HybridState& init, std::span<const int> base_seq,
                                    const DwellSchedule& sched, const ObjectiveConfig& cfg, double dedupe_tol) {
  Extraction ex;
  ex.eval = evaluate_F_detailed(sys, metric, init, base_seq, sched, cfg);
  if (!ex.eval.feasible) throw std::runtime_error("schedule is infeasible: " + ex.eval.reason);
  const double tp = ex.eval.reduced.tp;
  const double tP = ex.eval.reduced.tP;
  for (const auto& sw : ex.eval.trajectory.switches) {
    const bool in_cycle = sw.t >= tp && sw.t <= tP;
    if (in_cycle) ex.cycle.push_back(sw.to);
    bool dup = false;
    for (auto& have : ex.switches) {
      if (have.from != sw.from || have.to != sw.to) continue;
      double dmax = 0.0;
      for (std::size_t i = 0; i < sw.x.size(); ++i) dmax = std::max(dmax, std::fabs(have.x[i] - sw.x[i]));
      if (dmax <= dedupe_tol) {
        have.in_cycle = have.in_cycle || in_cycle;
        dup = true;
        break;
      }
    }
    if (!dup) ex.switches.push_back({sw.from, sw.to, sw.t, sw.x, in_cycle});
  }
  if (ex.cycle.empty()) ex.cycle.push_back(ex.eval.trajectory.at(tp).mode);
  // a window spanning several periods repeats the same word; keep one copy
  const std::size_t n = ex.cycle.size();
  for (std::size_t len = 1; len < n; ++len) {
    if (n % len) continue;
    bool rep = true;
    for (std::size_t i = len; i < n && rep; ++i) rep = ex.cycle[i] == ex.cycle[i - len];
    if (rep) {
      ex.cycle.resize(len);
      break;
    }
  }
  return ex;
}

} // namespace optswitch

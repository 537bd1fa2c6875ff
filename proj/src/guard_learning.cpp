#include "optswitch/guard_learning.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <random>

namespace optswitch {

long pac_sample_size(const PacConfig& cfg) {
  if (!cfg.valid()) throw std::invalid_argument("PAC config needs 0 < epsilon, delta < 1 and n >= 0");
  const double lb = std::log(cfg.log_base);
  const double a = 4.0 / cfg.epsilon * (std::log(2.0 / cfg.delta) / lb);
  const double b = (8.0 * cfg.n + 8.0) / cfg.epsilon * (std::log(13.0 / cfg.epsilon) / lb);
  return static_cast<long>(std::ceil(std::max(a, b)));
}

std::size_t LabeledSample::positives() const {
  return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const auto& p) { return p.label > 0; }));
}
std::size_t LabeledSample::negatives() const { return points.size() - positives(); }

double HalfspaceGuard::margin(std::span<const double> x) const {
  double s = theta0;
  for (std::size_t i = 0; i < theta.size() && i < x.size(); ++i) s += theta[i] * x[i];
  return s;
}

long training_errors(const HalfspaceGuard& g, const LabeledSample& sample) {
  long e = 0;
  for (const auto& p : sample.points) {
    const double v = g.margin(p.x);
    if (p.label > 0 ? !(v >= 0.0) : !(v < 0.0)) ++e;
  }
  return e;
}

PerceptronResult perceptron_learn(const LabeledSample& sample, int max_passes, bool normalize,
                                  std::span<const double> widths) {
  const std::size_t N = sample.points.size();
  if (N == 0) throw std::invalid_argument("perceptron needs a nonempty sample");
  if (sample.positives() == 0 || sample.negatives() == 0)
    throw std::invalid_argument("perceptron needs both positive and negative points");
  const std::size_t n = sample.points[0].x.size();
  for (const auto& p : sample.points)
    if (p.x.size() != n) throw std::invalid_argument("sample points differ in dimension");

  // affine map to [-1, 1] per feature
  std::vector<double> mid(n, 0.0), half(n, 1.0);
  if (normalize) {
    for (std::size_t i = 0; i < n; ++i) {
      double lo = sample.points[0].x[i], hi = lo;
      for (const auto& p : sample.points) {
        lo = std::min(lo, p.x[i]);
        hi = std::max(hi, p.x[i]);
      }
      mid[i] = 0.5 * (lo + hi);
      half[i] = hi > lo ? 0.5 * (hi - lo) : 0.0;
    }
    if (widths.size() == n && std::all_of(widths.begin(), widths.end(), [](double w) { return w > 0.0; })) {
      // keep the relative scale of the declared ranges: a feature that barely moves
      // inside the sample must not be blown up to the same size as the others
      double c = 0.0;
      for (std::size_t i = 0; i < n; ++i) c = std::max(c, half[i] / widths[i]);
      for (std::size_t i = 0; i < n; ++i) half[i] = half[i] > 0.0 ? c * widths[i] : 0.0;
    }
  }
  std::vector<double> z(N * n);
  for (std::size_t k = 0; k < N; ++k)
    for (std::size_t i = 0; i < n; ++i)
      z[k * n + i] = half[i] > 0.0 ? (sample.points[k].x[i] - mid[i]) / half[i] : 0.0;

  std::vector<double> th(n, 0.0);
  double th0 = 0.0;
  auto score = [&](std::size_t k) {
    double s = th0;
    for (std::size_t i = 0; i < n; ++i) s += th[i] * z[k * n + i];
    return s;
  };
  auto unmap = [&](const std::vector<double>& t, double t0) {
    HalfspaceGuard g;
    g.theta.assign(n, 0.0);
    g.theta0 = t0;
    for (std::size_t i = 0; i < n; ++i) {
      if (half[i] <= 0.0) continue;
      g.theta[i] = t[i] / half[i];
      g.theta0 -= t[i] * mid[i] / half[i];
    }
    return g;
  };

  const long budget = static_cast<long>(std::max(1, max_passes)) * static_cast<long>(N);
  long updates = 0;
  std::vector<double> pocket_th = th;
  double pocket_th0 = th0;
  long pocket_err = static_cast<long>(N) + 1;
  for (;;) {
    // one sweep finds the first mistake and counts the rest for the pocket
    std::size_t bad = N;
    long err = 0;
    for (std::size_t k = 0; k < N; ++k) {
      if (sample.points[k].label * score(k) <= 0.0) {
        if (bad == N) bad = k;
        ++err;
      }
    }
    if (bad == N) return {unmap(th, th0), updates};
    if (err < pocket_err) {
      pocket_err = err;
      pocket_th = th;
      pocket_th0 = th0;
    }
    if (updates >= budget) {
      HalfspaceGuard pocket = unmap(pocket_th, pocket_th0);
      const long err = training_errors(pocket, sample);
      throw NonSeparableError("sample not separated after " + std::to_string(updates) + " updates; " +
                                  std::to_string(err) + " points misclassified by the best halfspace seen",
                              err, std::move(pocket));
    }
    const double y = sample.points[bad].label;
    for (std::size_t i = 0; i < n; ++i) th[i] += y * z[bad * n + i];
    th0 += y;
    ++updates;
  }
}

std::vector<std::size_t> feature_indices(const MultimodalSystem& sys) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sys.dim(); ++i)
    if (sys.variables[i].role == VariableRole::State) out.push_back(i);
  return out;
}

std::vector<std::size_t> parameter_indices(const MultimodalSystem& sys) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sys.dim(); ++i)
    if (sys.variables[i].role == VariableRole::Parameter) out.push_back(i);
  return out;
}

std::vector<HybridState> select_initial_states(const MultimodalSystem& sys, const SynthesisOptions& opts,
                                               long pac_size) {
  std::mt19937_64 rng(opts.seed ^ 0x1a17c0ffeeull);
  std::vector<HybridState> chosen;
  const auto want = static_cast<std::size_t>(std::max(1L, pac_size));
  if (sys.init.finite()) {
    auto all = sys.init.enumerate();
    if (all.size() <= want) {
      chosen = std::move(all);
    } else {
      std::vector<std::size_t> idx(all.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(want);
      std::sort(idx.begin(), idx.end());
      for (std::size_t i : idx) chosen.push_back(all[i]);
    }
  } else {
    for (std::size_t i = 0; i < want; ++i) chosen.push_back(sys.init.draw(rng));
  }
  if (opts.max_inits > 0 && chosen.size() > opts.max_inits) {
    // even stride keeps every part of the set represented
    std::vector<HybridState> thin;
    for (std::size_t i = 0; i < opts.max_inits; ++i) {
      const std::size_t at = (2 * i + 1) * chosen.size() / (2 * opts.max_inits);
      thin.push_back(chosen[at]);
    }
    chosen = std::move(thin);
  }
  return chosen;
}

namespace {

struct Screening {
  double sentinel;
  std::vector<std::vector<double>> starts; // best feasible probes, ascending
};

// Probe the box once. The sentinel must sit above attainable costs, so lift it
// if the best finite value is not below it; the best probes become restart
// points, since random starts often land on the flat sentinel plateau.
Screening screen_box(const ObjectiveFn& raw, const Bounds& b, std::uint64_t seed, double sentinel, int probes,
                     std::size_t keep) {
  std::mt19937_64 rng(seed ^ 0x5e471e1ull);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<double, std::vector<double>>> found;
  std::vector<double> x(b.dim());
  for (int k = 0; k < probes; ++k) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = b.lo[i] + u(rng) * (b.hi[i] - b.lo[i]);
    const double v = raw(x);
    if (std::isfinite(v)) found.emplace_back(v, x);
  }
  std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& c) { return a.first < c.first; });
  Screening s{sentinel, {}};
  if (!found.empty() && found.front().first >= sentinel) s.sentinel = 10.0 * found.front().first;
  for (const auto& [v, p] : found) {
    if (s.starts.size() >= keep || !(v < s.sentinel)) break;
    s.starts.push_back(p);
  }
  return s;
}

} // namespace

InitOutcome optimize_initial_state(const MultimodalSystem& sys, const PerformanceMetric& metric,
                                   const HybridState& init, const ObjectiveConfig& obj_in,
                                   const SimplexConfig& simplex_in, const SynthesisOptions& opts) {
  InitOutcome out;
  out.init = init;
  out.base_sequence = obj_in.base_sequence.empty() ? supersequence(static_cast<int>(sys.num_modes()), obj_in.k, init.mode)
                                                   : obj_in.base_sequence;
  const std::size_t dim = out.base_sequence.size() + 1;
  if (opts.bounds.dim() != dim) {
    out.error = "schedule bounds have " + std::to_string(opts.bounds.dim()) + " coordinates, need " + std::to_string(dim);
    return out;
  }
  ObjectiveConfig obj = obj_in;
  const auto& base = out.base_sequence;
  std::vector<std::vector<double>> starts = opts.starts;
  {
    ObjectiveConfig raw_cfg = obj;
    raw_cfg.sentinel = std::numeric_limits<double>::infinity();
    const ObjectiveFn raw = [&](std::span<const double> p) {
      return evaluate_F(sys, metric, init, base, schedule_from_params(p), raw_cfg);
    };
    Screening sc = screen_box(raw, opts.bounds, opts.seed, obj.sentinel, opts.screen_probes,
                              static_cast<std::size_t>(std::max(simplex_in.restarts, 0)));
    obj.sentinel = sc.sentinel;
    for (auto& p : sc.starts)
      if (starts.size() < static_cast<std::size_t>(std::max(simplex_in.restarts, 0))) starts.push_back(std::move(p));
  }
  const ObjectiveFn F = [&](std::span<const double> p) {
    return evaluate_F(sys, metric, init, base, schedule_from_params(p), obj);
  };
  SimplexConfig simplex = simplex_in;
  simplex.sentinel = obj.sentinel;
  out.opt = multi_start_minimize(F, opts.bounds, simplex, starts);
  if (!(out.opt.best_value < obj.sentinel)) {
    out.error = "no feasible schedule found";
    return out;
  }
  try {
    out.extraction = extract_switching_states(sys, metric, init, base, schedule_from_params(out.opt.best_point), obj);
    out.feasible = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

namespace {

struct PairKey {
  int from, to;
  std::vector<double> partition;
  bool operator<(const PairKey& o) const {
    if (from != o.from) return from < o.from;
    if (to != o.to) return to < o.to;
    return partition < o.partition;
  }
};

std::vector<double> pick(std::span<const double> x, const std::vector<std::size_t>& idx) {
  std::vector<double> out;
  for (std::size_t i : idx) out.push_back(x[i]);
  return out;
}

} // namespace

SynthesisResult learn_guards(const MultimodalSystem& sys, std::vector<InitOutcome> inits,
                             const SynthesisOptions& opts) {
  SynthesisResult res;
  res.inits = std::move(inits);
  res.logic = SwitchingLogic::none(sys.num_modes());
  const auto feats = feature_indices(sys);
  const auto params = parameter_indices(sys);
  res.feature_dim = feats.size();
  const auto names = sys.variable_names();

  std::vector<double> widths;
  for (std::size_t i : feats) widths.push_back(sys.variables[i].hi - sys.variables[i].lo);

  std::map<PairKey, LabeledSample> samples;
  for (const auto& io : res.inits) {
    if (!io.feasible || io.excluded) continue;
    const auto part = pick(io.init.x, params);
    const auto& ev = io.extraction.eval;
    const auto& traj = ev.trajectory;
    for (const auto& sw : io.extraction.switches) {
      if (!sw.in_cycle) continue;
      samples[{sw.from, sw.to, part}].points.push_back({pick(sw.x, feats), +1});
    }
    // the switch opening the cycle follows a transient; on the periodic orbit its
    // predecessor is the cycle's last switch one period earlier
    const double tp = ev.reduced.tp, tP = ev.reduced.tP;
    double first_in = -1.0, last_in = -1.0;
    for (const auto& sw : traj.switches)
      if (sw.t >= tp && sw.t <= tP) {
        if (first_in < 0) first_in = sw.t;
        last_in = sw.t;
      }
    double prev = 0.0;
    for (const auto& sw : traj.switches) {
      if (sw.t == first_in && last_in > first_in) prev = std::max(prev, last_in - (tP - tp));
      const double dwell = sw.t - prev;
      const bool in_cycle = sw.t >= tp && sw.t <= tP;
      if (in_cycle && dwell > 0.0) {
        const double w = opts.negatives_window * dwell;
        auto& s = samples[{sw.from, sw.to, part}];
        for (int i = 1; i <= opts.negatives_count; ++i) {
          const double tau = sw.t - w * i / opts.negatives_count;
          const auto p = traj.at(tau);
          s.points.push_back({pick(p.x, feats), -1});
        }
      }
      prev = sw.t;
    }
  }

  for (auto& [key, sample] : samples) {
    const std::string pair = sys.modes[static_cast<std::size_t>(key.from)] + " -> " + sys.modes[static_cast<std::size_t>(key.to)];
    if (sample.positives() == 0 || sample.negatives() == 0) {
      res.failures.push_back(pair + ": sample lacks one of the labels");
      continue;
    }
    LearnedGuard lg;
    lg.from = key.from;
    lg.to = key.to;
    lg.partition = key.partition;
    lg.positives = sample.positives();
    lg.negatives = sample.negatives();
    HalfspaceGuard h;
    try {
      const auto r = perceptron_learn(sample, opts.max_passes, true, widths);
      h = r.guard;
      lg.updates = r.updates;
    } catch (const NonSeparableError& e) {
      if (opts.strict_separable) {
        res.failures.push_back(pair + ": " + e.what());
        continue;
      }
      h = e.pocket;
      lg.separable = false;
      lg.updates = static_cast<long>(opts.max_passes) * static_cast<long>(sample.points.size());
      res.warnings.push_back(pair + ": " + e.what() + "; keeping that halfspace");
    }
    lg.training_error = training_errors(h, sample);

    // embed into the full variable space
    lg.halfspace.theta.assign(sys.dim(), 0.0);
    for (std::size_t k = 0; k < feats.size(); ++k) lg.halfspace.theta[feats[k]] = h.theta[k];
    lg.halfspace.theta0 = h.theta0;

    ConvexRegion piece;
    piece.constraints.push_back({lg.halfspace.theta, lg.halfspace.theta0, Relation::GreaterEqual});
    for (std::size_t k = 0; k < params.size(); ++k) {
      LinearConstraint c;
      c.coeffs.assign(sys.dim(), 0.0);
      c.coeffs[params[k]] = 1.0;
      c.offset = -key.partition[k];
      c.relation = Relation::Equal;
      piece.constraints.push_back(std::move(c));
    }
    lg.inequality = to_string(piece, names);
    const Region clipped = Region::of(piece).intersect(sys.over(key.from, key.to));
    for (const auto& p : clipped.pieces())
      res.logic.guards[static_cast<std::size_t>(key.from)][static_cast<std::size_t>(key.to)].add(p);
    res.guards.push_back(std::move(lg));
  }
  return res;
}

namespace {

std::vector<double> partition_of(const std::vector<std::size_t>& params, const HybridState& s) {
  std::vector<double> key;
  for (std::size_t i : params) key.push_back(s.x[i]);
  return key;
}

// The long-run cost does not depend on the prefix, so inits sharing parameter
// values that can reach the same cycle should reach the same optimum. A clear
// laggard is a failed search: retry it warm-started from the partition's
// winner, and leave it out of learning if it still lags.
void enforce_consistency(const MultimodalSystem& sys, const PerformanceMetric& metric, const ObjectiveConfig& obj,
                         const SimplexConfig& simplex, const SynthesisOptions& opts, std::vector<InitOutcome>& outs,
                         std::vector<std::string>& notes) {
  const auto params = parameter_indices(sys);
  auto best_in = [&](const std::vector<double>& key) {
    std::size_t best = outs.size();
    for (std::size_t j = 0; j < outs.size(); ++j)
      if (outs[j].feasible && !outs[j].excluded && partition_of(params, outs[j].init) == key &&
          (best == outs.size() || outs[j].extraction.eval.F < outs[best].extraction.eval.F))
        best = j;
    return best;
  };
  auto lags = [&](const InitOutcome& io, const InitOutcome& ref) {
    const double f = io.feasible ? io.extraction.eval.F : std::numeric_limits<double>::infinity();
    const double f0 = ref.extraction.eval.F;
    return f > f0 + opts.consistency_tol * std::fabs(f0) + 1e-9;
  };
  std::vector<std::size_t> retry;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const std::size_t b = best_in(partition_of(params, outs[i].init));
    if (b < outs.size() && b != i && lags(outs[i], outs[b])) retry.push_back(i);
  }
  std::vector<InitOutcome> again(retry.size());
  parallel_for(retry.size(), opts.threads, [&](std::size_t r) {
    const std::size_t i = retry[r];
    const std::size_t b = best_in(partition_of(params, outs[i].init));
    SynthesisOptions o = opts;
    o.seed = opts.seed + 7919 * i + 0x9e3779b9ull;
    o.starts = {outs[b].opt.best_point};
    SimplexConfig mine = simplex;
    mine.threads = 1;
    mine.rng_seed = simplex.rng_seed + 104729 * i + 0x7f4a7c15ull;
    again[r] = optimize_initial_state(sys, metric, outs[i].init, obj, mine, o);
  });
  for (std::size_t r = 0; r < retry.size(); ++r) {
    auto& io = outs[retry[r]];
    if (again[r].feasible && (!io.feasible || again[r].extraction.eval.F < io.extraction.eval.F)) {
      again[r].opt.evals += io.opt.evals;
      io = std::move(again[r]);
    }
  }
  for (std::size_t r = 0; r < retry.size(); ++r) {
    auto& io = outs[retry[r]];
    const std::size_t b = best_in(partition_of(params, io.init));
    if (io.feasible && b < outs.size() && lags(io, outs[b])) {
      io.excluded = true;
      notes.push_back("initial state " + std::to_string(retry[r]) + " left out: F " + format_number(io.extraction.eval.F) +
                      " against " + format_number(outs[b].extraction.eval.F) + " for the same parameters");
    }
  }
}

} // namespace

SynthesisResult synthesize_logic(const MultimodalSystem& sys, const PerformanceMetric& metric,
                                 const ObjectiveConfig& obj, const SimplexConfig& simplex,
                                 const SynthesisOptions& opts) {
  PacConfig pac = opts.pac;
  pac.n = static_cast<int>(feature_indices(sys).size());
  const long m = pac_sample_size(pac);
  const auto states = select_initial_states(sys, opts, m);
  if (states.empty()) throw std::invalid_argument("no initial states to synthesize from");

  std::vector<InitOutcome> outcomes(states.size());
  SimplexConfig inner = simplex;
  const bool outer_parallel = states.size() > 1;
  if (outer_parallel) inner.threads = 1;
  parallel_for(states.size(), outer_parallel ? opts.threads : 1, [&](std::size_t i) {
    SynthesisOptions o = opts;
    o.seed = opts.seed + 7919 * i;
    SimplexConfig mine = inner;
    mine.rng_seed = simplex.rng_seed + 104729 * i;
    outcomes[i] = optimize_initial_state(sys, metric, states[i], obj, mine, o);
  });
  std::vector<std::string> notes;
  if (opts.consistency_tol > 0.0) enforce_consistency(sys, metric, obj, inner, opts, outcomes, notes);
  SynthesisResult res = learn_guards(sys, std::move(outcomes), opts);
  res.pac_size = m;
  res.warnings.insert(res.warnings.begin(), notes.begin(), notes.end());
  for (const auto& io : res.inits)
    if (!io.feasible) res.warnings.push_back("initial state skipped: " + io.error);
  return res;
}

nlohmann::json synthesis_report(const MultimodalSystem& sys, const SynthesisResult& res, const SynthesisOptions& opts) {
  using nlohmann::json;
  const auto names = sys.variable_names();
  json j;
  j["system"] = sys.name;
  j["variables"] = names;
  j["modes"] = sys.modes;
  json guards = json::array();
  for (const auto& g : res.guards) {
    guards.push_back({{"from", sys.modes[static_cast<std::size_t>(g.from)]},
                      {"to", sys.modes[static_cast<std::size_t>(g.to)]},
                      {"partition", g.partition},
                      {"theta", g.halfspace.theta},
                      {"theta0", g.halfspace.theta0},
                      {"inequality", g.inequality},
                      {"positives", g.positives},
                      {"negatives", g.negatives},
                      {"training_error", g.training_error},
                      {"updates", g.updates},
                      {"separable", g.separable}});
  }
  j["guards"] = guards;
  json logic = json::array();
  for (std::size_t q = 0; q < sys.num_modes(); ++q)
    for (std::size_t r = 0; r < sys.num_modes(); ++r)
      if (!res.logic.guards[q][r].is_empty())
        logic.push_back({{"from", sys.modes[q]}, {"to", sys.modes[r]}, {"region", to_string(res.logic.guards[q][r], names)}});
  j["logic"] = logic;
  json inits = json::array();
  for (const auto& io : res.inits) {
    json e{{"mode", sys.modes[static_cast<std::size_t>(io.init.mode)]}, {"state", io.init.x}, {"feasible", io.feasible}};
    if (io.excluded) e["excluded"] = true;
    if (io.feasible) {
      const auto& ev = io.extraction.eval;
      e["F"] = ev.F;
      e["cost"] = ev.cost;
      e["residual_d"] = ev.distance;
      std::vector<std::string> cyc;
      for (int q : io.extraction.cycle) cyc.push_back(sys.modes[static_cast<std::size_t>(q)]);
      e["cycle"] = cyc;
      e["schedule"] = io.opt.best_point;
      e["evals"] = io.opt.evals;
    } else {
      e["error"] = io.error;
    }
    inits.push_back(std::move(e));
  }
  j["initial_states"] = inits;
  const std::size_t mguards = res.guards.size();
  j["pac"] = {{"epsilon", opts.pac.epsilon},
              {"delta", opts.pac.delta},
              {"n", res.feature_dim},
              {"sample_size", res.pac_size},
              {"initial_states_used", res.inits.size()},
              {"guards", mguards},
              {"failure_probability_bound", std::min(1.0, static_cast<double>(mguards) * opts.pac.epsilon)}};
  j["warnings"] = res.warnings;
  j["failures"] = res.failures;
  return j;
}

SwitchingLogic logic_from_report(const MultimodalSystem& sys, const nlohmann::json& report) {
  SwitchingLogic logic = SwitchingLogic::none(sys.num_modes());
  const auto names = sys.variable_names();
  if (!report.contains("logic")) throw std::invalid_argument("guard report has no 'logic' entry");
  for (const auto& g : report.at("logic")) {
    const int from = sys.mode_index(g.at("from").get<std::string>());
    const int to = sys.mode_index(g.at("to").get<std::string>());
    if (from < 0 || to < 0) throw std::invalid_argument("guard report names an unknown mode");
    logic.guards[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)] =
        parse_region(g.at("region").get<std::string>(), names);
  }
  return logic;
}

} // namespace optswitch

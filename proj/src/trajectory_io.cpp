#include "optswitch/trajectory_io.hpp"

#include <sstream>

#include "optswitch/region.hpp"

namespace optswitch {

namespace {

// pr indices in output order: penalties first, then rewards
std::vector<std::size_t> pr_order(const PerformanceMetric& metric) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < metric.size(); ++i)
    if (metric.accumulators[i].kind == AccumulatorKind::Penalty) out.push_back(i);
  for (std::size_t i = 0; i < metric.size(); ++i)
    if (metric.accumulators[i].kind == AccumulatorKind::Reward) out.push_back(i);
  return out;
}

bool keep(const ExtendedTrajectory& traj, std::size_t i, std::size_t stride) {
  if (stride <= 1 || i == 0 || i + 1 == traj.size() || i % stride == 0) return true;
  // both sides of a switch
  if (traj.mode(i) != traj.mode(i - 1)) return true;
  return i + 1 < traj.size() && traj.mode(i + 1) != traj.mode(i);
}

} // namespace

std::vector<std::string> trajectory_columns(const MultimodalSystem& sys, const PerformanceMetric& metric) {
  std::vector<std::string> cols{"t", "mode"};
  for (const auto& v : sys.variables) cols.push_back(v.name);
  for (std::size_t i : pr_order(metric)) cols.push_back(metric.accumulators[i].name);
  return cols;
}

std::string trajectory_csv(const ExtendedTrajectory& traj, const MultimodalSystem& sys,
                           const PerformanceMetric& metric, const ArtifactStamp& stamp, std::size_t stride) {
  std::ostringstream out;
  out << "# seed=" << stamp.seed << " config=" << stamp.config_hash << '\n';
  const auto cols = trajectory_columns(sys, metric);
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  const auto order = pr_order(metric);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (!keep(traj, i, stride)) continue;
    out << format_number(traj.time(i)) << ',' << sys.modes[static_cast<std::size_t>(traj.mode(i))];
    for (double v : traj.x(i)) out << ',' << format_number(v);
    const auto pr = traj.pr(i);
    for (std::size_t k : order) out << ',' << format_number(pr[k]);
    out << '\n';
  }
  return out.str();
}

nlohmann::json trajectory_json(const ExtendedTrajectory& traj, const MultimodalSystem& sys,
                               const PerformanceMetric& metric, const ArtifactStamp& stamp, std::size_t stride) {
  nlohmann::json j;
  j["seed"] = stamp.seed;
  j["config_hash"] = stamp.config_hash;
  j["columns"] = trajectory_columns(sys, metric);
  const auto order = pr_order(metric);
  auto& rows = j["samples"] = nlohmann::json::array();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (!keep(traj, i, stride)) continue;
    nlohmann::json row = nlohmann::json::array();
    row.push_back(traj.time(i));
    row.push_back(sys.modes[static_cast<std::size_t>(traj.mode(i))]);
    for (double v : traj.x(i)) row.push_back(v);
    const auto pr = traj.pr(i);
    for (std::size_t k : order) row.push_back(pr[k]);
    rows.push_back(std::move(row));
  }
  auto& ev = j["switch_events"] = nlohmann::json::array();
  for (const auto& s : traj.switches) {
    ev.push_back({{"t", s.t},
                  {"from", sys.modes[static_cast<std::size_t>(s.from)]},
                  {"to", sys.modes[static_cast<std::size_t>(s.to)]},
                  {"state", s.x}});
  }
  return j;
}

} // namespace optswitch

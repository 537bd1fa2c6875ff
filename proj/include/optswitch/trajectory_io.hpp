#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "optswitch/model.hpp"
#include "optswitch/simulator.hpp"

namespace optswitch {

/// Provenance stamped into every artifact.
struct ArtifactStamp {
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// Column names: t, mode, variables, penalty accumulators, reward accumulators.
std::vector<std::string> trajectory_columns(const MultimodalSystem& sys, const PerformanceMetric& metric);

/// CSV with a `# seed=... config=...` preamble. `stride` > 1 thins interior
/// samples; samples at switch instants are always kept.
std::string trajectory_csv(const ExtendedTrajectory& traj, const MultimodalSystem& sys,
                           const PerformanceMetric& metric, const ArtifactStamp& stamp,
                           std::size_t stride = 1);

nlohmann::json trajectory_json(const ExtendedTrajectory& traj, const MultimodalSystem& sys,
                               const PerformanceMetric& metric, const ArtifactStamp& stamp,
                               std::size_t stride = 1);

} // namespace optswitch

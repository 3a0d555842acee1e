#pragma once

#include "irlkit/obs_model.hpp"

namespace irl {

/// How the simulated sensing system fills in the source distributions.
enum class EtaVariant { Uniform, Plausible, Oracle };

EtaVariant eta_variant_from_string(const std::string& name);

/// Ground truth produced alongside an observation log.
struct SimulatedDemo {
  std::vector<Trajectory> trajectories;
  ObservationLog log;
  // true_sources mirrors log.trajectories: the actual emitter of each
  // observation (0 = subject), for audits only.
  std::vector<std::vector<std::vector<int>>> true_sources;
};

/// Baseline: per timestep, independently pick the (s,a) maximizing the
/// subject-weighted observation log-likelihood. No temporal consistency.
std::vector<Trajectory> ml_trajectories(const DirichletObsModel& obs_model,
                                        const ObservationLog& log, const FiniteMdp& mdp);

/// Baseline: keep only observations whose most likely source is the subject
/// and strip the confounder entries from eta.
ObservationLog ml_observations(const ObservationLog& log);

}  // namespace irl

#pragma once

#include "irlkit/domains.hpp"

namespace irl {

struct GridworldSpec {
  int goal_corner = 3;        // 0=(0,0) 1=(0,4) 2=(4,0) 3=(4,4)
  double slip_probability = 0.1;
  int num_elements = 0;
  int obs_per_timestep = 40;
  int num_trajectories = 20;
  int horizon = 10;
};

/// The 5x5 Gridworld: four move actions with perpendicular slip, one reward
/// feature per corner, distance-exponential corner observations, and one
/// random emission law per confounding element.
struct GridworldDomain {
  GridworldSpec spec;
  FiniteMdp mdp;
  RewardModel reward;  // weights: 1 on the goal corner feature
  ObservationVocabulary vocab;           // the four corner symbols
  std::vector<double> subject_emission;  // [s][w], action-independent truth
  std::vector<double> element_emission;  // [e][w]

  /// The generating model expressed as a DirichletObsModel with means equal
  /// to the emission laws (up to the hyperparameter floor).
  DirichletObsModel true_model() const;
};

constexpr int kGridSide = 5;
int grid_corner_state(int corner);
int grid_manhattan(int state, int corner);

GridworldDomain build_gridworld(const GridworldSpec& spec, std::uint64_t seed);

/// Expert rollouts from the center cell plus the per-timestep observation
/// bags, apportioned fairly across subject and elements.
SimulatedDemo simulate_gridworld_demo(const GridworldDomain& domain, EtaVariant variant,
                                      std::uint64_t seed);

/// Controlled calibration run: the subject is driven on a uniform random walk
/// so the fitted emission model covers the workspace, not just the expert's
/// path. Subject observations only, eta = {1}.
SimulatedDemo simulate_gridworld_calibration(const GridworldDomain& domain,
                                             int n_trajectories, std::uint64_t seed);

}  // namespace irl

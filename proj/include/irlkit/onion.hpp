#pragma once

#include "irlkit/domains.hpp"

namespace irl {

// State variables of the sorting task.
enum OnionQuality { kQualityUnknown = 0, kQualityGood = 1, kQualityBlemished = 2 };
enum OnionPosition { kOnConveyor = 0, kGripped = 1, kInBin = 2 };
enum GripperPosition { kGripperConveyor = 0, kGripperBin = 1, kGripperInspection = 2 };
enum OnionAction {
  kActGrip = 0,
  kActRelease = 1,
  kActInspect = 2,
  kActMoveConveyor = 3,
  kActMoveInspection = 4,
  kActMoveBin = 5
};

struct OnionSpec {
  int horizon = 6;
  int num_trajectories = 10;
  int obs_per_timestep = 10;  // subject observations per visible timestep
  bool mirror_enabled = true;
  double occlusion_probability = 0.5;  // per trajectory, in partially controlled runs
  double mirror_emit_probability = 0.5;
  // Emission law constants, recorded in the log's generator config.
  double gripper_region_mass = 0.8;  // on the region matching the gripper position
  double good_bright = 0.9;
  double blemished_bright_pre = 0.55;
  double blemished_bright_revealed = 0.3;
};

/// The 27-state sorting MDP plus an absorbing sink entered after Release.
/// The Inspect row is the single non-point-mass row: quality resolves to good
/// or blemished with equal probability; the simulator forces the episode's
/// true quality instead of sampling it.
struct OnionDomain {
  OnionSpec spec;
  FiniteMdp mdp;          // 28 states, 6 actions
  RewardModel reward;     // true weights (-1, +1, +1, -1)
  ObservationVocabulary vocab;  // 20 gripper regions + bright/dark onion
  int region_of_gripper[3] = {4, 10, 16};  // camera region per gripper position
};

int onion_state(int quality, int position, int gripper);
constexpr int kOnionSink = 27;
constexpr int kNumRegions = 20;
constexpr int kBrightOnion = 20;
constexpr int kDarkOnion = 21;

OnionDomain build_onion_mdp(const OnionSpec& spec);

/// Names of the confounding elements, in eta order after the subject.
std::vector<std::string> onion_element_names();

struct OnionDemo {
  std::vector<Trajectory> trajectories;
  std::vector<int> qualities;  // per trajectory: kQualityGood or kQualityBlemished
  ObservationLog partially_controlled;
  ObservationLog controlled;  // confounders removed, sources known
  std::vector<std::vector<std::vector<int>>> true_sources;  // for the partial log
  std::vector<std::vector<bool>> occluded;                  // [traj][t]
};

/// Simulate n sorts (alternating good/blemished onions): record the true
/// trajectories, a fully controlled log, and a partially controlled log with
/// the three confounding elements, occlusion windows, and the mirror channel.
OnionDemo simulate_onion_demo(const OnionDomain& domain, EtaVariant variant,
                              std::uint64_t seed, int n_trajectories);

}  // namespace irl

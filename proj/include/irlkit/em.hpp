#pragma once

#include <optional>
#include <vector>

#include "irlkit/sampler.hpp"

namespace irl {

/// A demonstration with occluded timesteps: an absent step means the expert
/// was hidden there. occluded_states lists where the expert may be while
/// hidden (empty: anywhere).
struct OccludedDemo {
  std::vector<std::optional<std::pair<int, int>>> steps;
  std::vector<int> occluded_states;
};

struct EmOptions {
  int restarts = 5;
  int max_em_iters = 50;
  double em_tolerance = 1e-3;  // on ||theta_next - theta||_inf
  int enumeration_cap = 6;     // longest hidden segment enumerated exactly
  FitOptions fit;
  SamplerOptions sampler;
  std::uint64_t seed = 0;
};

struct EmResult {
  std::vector<double> weights;
  Policy policy;  // soft policy at the final weights
  bool converged = false;
  int iterations = 0;
  double entropy = 0.0;                // causal entropy, used for restart selection
  std::vector<double> theta_deltas;    // ||theta(t+1) - theta(t)||_inf per iteration
};

/// E-step feature expectations over latent trajectory completions, computed by
/// exact enumeration of each contiguous hidden segment (up to the cap) or by
/// the sampler with degenerate pinning observations beyond it.
FeatureExpectations latent_feature_expectations(const std::vector<OccludedDemo>& demos,
                                                const FiniteMdp& mdp,
                                                const RewardModel& reward,
                                                int enumeration_cap = 6,
                                                const SamplerOptions& sampler_opts = {});

/// EM over occluded demonstrations: alternate latent feature expectations with
/// weight fitting; random restarts, maximum-causal-entropy selection.
EmResult run_em(const std::vector<OccludedDemo>& demos, const FiniteMdp& mdp,
                const RewardModel& reward_features, const EmOptions& opts);

/// EM over raw observation streams: the E-step runs the hierarchical Bayes
/// inference loop and takes feature expectations under the inferred
/// trajectory posteriors.
EmResult run_em(const ObservationLog& log, const DirichletObsModel& prior,
                const FiniteMdp& mdp, const RewardModel& reward_features,
                const EmOptions& opts);

}  // namespace irl

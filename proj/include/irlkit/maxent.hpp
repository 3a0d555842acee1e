#pragma once

#include <vector>

#include "irlkit/mdp.hpp"

namespace irl {

/// Average per-trajectory summed feature counts; the sufficient statistics of
/// a demonstration set.
struct FeatureExpectations {
  std::vector<double> values;  // length K, each in [0, horizon]
  int normalizer = 0;          // number of demonstrations averaged over
};

FeatureExpectations empirical_feature_expectations(const std::vector<Trajectory>& demos,
                                                   const FiniteMdp& mdp,
                                                   const RewardModel& reward);

/// Expected per-trajectory feature counts under a policy, via the forward
/// state-visitation recursion over the horizon.
FeatureExpectations expected_feature_counts(const FiniteMdp& mdp, const Policy& policy,
                                            const RewardModel& reward);

struct FitOptions {
  double tolerance = 1e-4;  // on max_k |E[phi_k] - target_k|
  int max_iters = 5000;
  double step = 0.5;        // base step of the per-coordinate adaptive descent
  double l2_reg = 1e-3;
  // Sparsity penalty applied via per-coordinate soft-thresholding; weights
  // whose feature-count gap stays below this never activate. Off by default.
  double l1_reg = 0.0;
  std::vector<double> initial_theta;  // empty: zeros
};

struct FitResult {
  std::vector<double> weights;
  bool converged = false;
  int iterations = 0;
  double grad_inf_norm = 0.0;
};

/// M-step: fit weights so the soft policy's expected feature counts match the
/// target. Gradient of the dual is (E[phi] - target); per-coordinate adaptive
/// step accumulation.
FitResult fit_weights(const FiniteMdp& mdp, const RewardModel& reward_features,
                      const FeatureExpectations& target, const FitOptions& opts = {});

/// Dual objective E_start[V^soft] - theta . target + (l2/2)|theta|^2; its
/// gradient is expected_feature_counts - target + l2 * theta.
double dual_objective(const FiniteMdp& mdp, const RewardModel& reward_features,
                      const std::vector<double>& theta, const FeatureExpectations& target,
                      double l2_reg = 0.0);

/// Causal entropy of a stochastic policy under its own visitation distribution.
double causal_entropy(const FiniteMdp& mdp, const Policy& policy);

}  // namespace irl

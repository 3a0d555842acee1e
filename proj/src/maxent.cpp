#include "irlkit/maxent.hpp"

#include <algorithm>
#include <cmath>

namespace irl {

FeatureExpectations empirical_feature_expectations(const std::vector<Trajectory>& demos,
                                                   const FiniteMdp& mdp,
                                                   const RewardModel& reward) {
  check(!demos.empty(), "empirical_feature_expectations: empty demonstration set");
  FeatureExpectations out;
  out.values.assign(reward.num_features, 0.0);
  out.normalizer = static_cast<int>(demos.size());
  for (const Trajectory& traj : demos)
    for (auto [s, a] : traj.steps)
      for (int k = 0; k < reward.num_features; ++k)
        out.values[k] += reward.feature(s, a, k, mdp.num_actions);
  for (double& v : out.values) v /= out.normalizer;
  return out;
}

FeatureExpectations expected_feature_counts(const FiniteMdp& mdp, const Policy& policy_in,
                                            const RewardModel& reward) {
  Policy policy = policy_in.to_stochastic(mdp.num_states, mdp.num_actions);
  const int S = mdp.num_states, A = mdp.num_actions, K = reward.num_features;
  FeatureExpectations out;
  out.values.assign(K, 0.0);
  out.normalizer = 1;
  std::vector<double> d = mdp.start, next(S);
  for (int t = 0; t < mdp.horizon; ++t) {
    const std::vector<double>& table = policy.table(t);
    std::fill(next.begin(), next.end(), 0.0);
    for (int s = 0; s < S; ++s) {
      if (d[s] == 0.0) continue;
      for (int a = 0; a < A; ++a) {
        double mass = d[s] * table[static_cast<std::size_t>(s) * A + a];
        if (mass == 0.0) continue;
        for (int k = 0; k < K; ++k)
          out.values[k] += mass * reward.feature(s, a, k, A);
        const double* row = &mdp.transition[(static_cast<std::size_t>(s) * A + a) * S];
        for (int s2 = 0; s2 < S; ++s2) next[s2] += mass * row[s2];
      }
    }
    d.swap(next);
  }
  return out;
}

FitResult fit_weights(const FiniteMdp& mdp, const RewardModel& reward_features,
                      const FeatureExpectations& target, const FitOptions& opts) {
  const int K = reward_features.num_features;
  check(static_cast<int>(target.values.size()) == K, "fit_weights: target size mismatch");
  for (double v : target.values)
    check(v >= 0.0 && v <= mdp.horizon + 1e-9, "fit_weights: target outside [0, horizon]");

  FitResult out;
  out.weights = opts.initial_theta.empty() ? std::vector<double>(K, 0.0)
                                           : opts.initial_theta;
  check(static_cast<int>(out.weights.size()) == K, "fit_weights: initial theta size");

  std::vector<double> accum(K, 0.0);
  for (int it = 0; it < opts.max_iters; ++it) {
    RewardModel reward = reward_features.with_weights(out.weights);
    SoftResult soft = soft_value_iteration(mdp, reward);
    FeatureExpectations expected = expected_feature_counts(mdp, soft.policy, reward);

    double gap = 0.0;
    for (int k = 0; k < K; ++k)
      gap = std::max(gap, std::abs(expected.values[k] - target.values[k]));
    out.iterations = it;
    out.grad_inf_norm = gap;
    if (gap <= opts.tolerance) {
      out.converged = true;
      return out;
    }
    double moved = 0.0;
    for (int k = 0; k < K; ++k) {
      double g = expected.values[k] - target.values[k] + opts.l2_reg * out.weights[k];
      accum[k] += g * g;
      double step = opts.step / std::sqrt(accum[k] + 1e-12);
      double cand = out.weights[k] - step * g;
      double thr = step * opts.l1_reg;
      double next = cand > thr ? cand - thr : (cand < -thr ? cand + thr : 0.0);
      moved = std::max(moved, std::abs(next - out.weights[k]));
      out.weights[k] = next;
    }
    // With an active sparsity penalty the feature gap plateaus near the
    // penalty's dead zone; a fixed point of the thresholded update is the
    // penalized optimum, so stop there.
    if (opts.l1_reg > 0.0 && moved <= 1e-10) {
      out.converged = true;
      return out;
    }
  }
  out.iterations = opts.max_iters;
  return out;
}

double dual_objective(const FiniteMdp& mdp, const RewardModel& reward_features,
                      const std::vector<double>& theta, const FeatureExpectations& target,
                      double l2_reg) {
  RewardModel reward = reward_features.with_weights(theta);
  SoftResult soft = soft_value_iteration(mdp, reward);
  double obj = soft_log_partition(mdp, soft);
  for (std::size_t k = 0; k < theta.size(); ++k) {
    obj -= theta[k] * target.values[k];
    obj += 0.5 * l2_reg * theta[k] * theta[k];
  }
  return obj;
}

double causal_entropy(const FiniteMdp& mdp, const Policy& policy_in) {
  Policy policy = policy_in.to_stochastic(mdp.num_states, mdp.num_actions);
  const int S = mdp.num_states, A = mdp.num_actions;
  double entropy = 0.0;
  std::vector<double> d = mdp.start, next(S);
  for (int t = 0; t < mdp.horizon; ++t) {
    const std::vector<double>& table = policy.table(t);
    std::fill(next.begin(), next.end(), 0.0);
    for (int s = 0; s < S; ++s) {
      if (d[s] == 0.0) continue;
      for (int a = 0; a < A; ++a) {
        double p = table[static_cast<std::size_t>(s) * A + a];
        if (p <= 0.0) continue;
        entropy -= d[s] * p * std::log(p);
        const double* row = &mdp.transition[(static_cast<std::size_t>(s) * A + a) * S];
        double mass = d[s] * p;
        for (int s2 = 0; s2 < S; ++s2) next[s2] += mass * row[s2];
      }
    }
    d.swap(next);
  }
  return entropy;
}

}  // namespace irl

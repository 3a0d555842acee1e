#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "irlkit/common.hpp"

namespace irl {

/// Finite MDP without the reward: states, actions, transition kernel,
/// start distribution, planning horizon. discount is used only by the
/// infinite-horizon solvers.
struct FiniteMdp {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> transition;  // [s][a][s'] flattened, rows sum to 1
  std::vector<double> start;       // [s], sums to 1
  int horizon = 1;
  double discount = 1.0;
  std::vector<std::uint8_t> terminal;  // [s][a]; empty means no terminal pairs
  int sink_state = -1;                 // absorbing pad state, -1 if none

  double trans(int s, int a, int s2) const {
    return transition[(static_cast<std::size_t>(s) * num_actions + a) * num_states + s2];
  }
  double& trans(int s, int a, int s2) {
    return transition[(static_cast<std::size_t>(s) * num_actions + a) * num_states + s2];
  }
  bool is_terminal(int s, int a) const {
    return !terminal.empty() && terminal[static_cast<std::size_t>(s) * num_actions + a] != 0;
  }

  void validate() const;
  /// True when the kernel is effectively deterministic (most rows point masses);
  /// used to pick the sampling sweep for this MDP.
  bool mostly_deterministic() const;
};

/// Linear reward over K binary features: R(s,a) = sum_k weights[k] * phi_k(s,a).
struct RewardModel {
  int num_features = 0;
  std::vector<std::uint8_t> features;  // [s][a][k], values in {0,1}
  std::vector<double> weights;         // length K

  std::uint8_t feature(int s, int a, int k, int num_actions) const {
    return features[(static_cast<std::size_t>(s) * num_actions + a) * num_features + k];
  }
  double reward(int s, int a, int num_actions) const {
    double r = 0.0;
    const std::uint8_t* row =
        &features[(static_cast<std::size_t>(s) * num_actions + a) * num_features];
    for (int k = 0; k < num_features; ++k) r += weights[k] * row[k];
    return r;
  }
  RewardModel with_weights(std::vector<double> w) const {
    RewardModel out = *this;
    out.weights = std::move(w);
    return out;
  }
};

/// Deterministic or stochastic policy; possibly nonstationary (one table per
/// timestep). A single table means stationary.
struct Policy {
  enum class Kind { Deterministic, Stochastic };
  Kind kind = Kind::Deterministic;
  std::vector<std::vector<int>> act;      // deterministic: act[t][s]
  std::vector<std::vector<double>> prob;  // stochastic: prob[t][s*A+a]

  int num_tables() const {
    return static_cast<int>(kind == Kind::Deterministic ? act.size() : prob.size());
  }
  int action_at(int t, int s) const {
    const auto& table = act[std::min<std::size_t>(t, act.size() - 1)];
    return table[s];
  }
  double prob_at(int t, int s, int a, int num_actions) const;
  const std::vector<double>& table(int t) const {
    return prob[std::min<std::size_t>(t, prob.size() - 1)];
  }
  Policy to_stochastic(int num_states, int num_actions) const;
  void validate(int num_states, int num_actions) const;
};

/// Ordered (s,a) steps, at most horizon of them.
struct Trajectory {
  std::vector<std::pair<int, int>> steps;
};

struct SolveResult {
  std::vector<double> value;  // V(s) from the first timestep
  Policy policy;              // deterministic greedy, nonstationary when finite-horizon
};

/// Exact planning against reward.weights. Finite-horizon backward induction
/// when horizon < infinity is modeled (always here); discounted value
/// iteration to 1e-8 when opts request the discounted mode.
SolveResult solve_optimal(const FiniteMdp& mdp, const RewardModel& reward,
                          bool discounted = false);

/// Exact evaluation of a (total) policy under reward; returns V(s) at t=0.
std::vector<double> evaluate_policy(const FiniteMdp& mdp, const RewardModel& reward,
                                    const Policy& policy, bool discounted = false);

/// Inverse learning error: L1 distance between the value functions of the two
/// policies, both evaluated under the true reward.
double ile(const FiniteMdp& mdp, const RewardModel& true_reward,
           const Policy& expert_policy, const Policy& learned_policy,
           bool discounted = false);

struct SoftResult {
  Policy policy;                          // stochastic, strictly positive rows
  std::vector<std::vector<double>> value; // value[t][s], soft values
};

/// Maximum-causal-entropy planning: V(s) = logsumexp_a [ r(s,a) + E[V(s')] ],
/// Pr(a|s) = exp(r + E[V'] - V). Per-timestep tables for the finite horizon,
/// stationary fixed point (tolerance 1e-8) for the discounted mode.
SoftResult soft_value_iteration(const FiniteMdp& mdp, const RewardModel& reward,
                                bool discounted = false);

/// E_start[V_0^soft]; the log-partition of the trajectory distribution.
double soft_log_partition(const FiniteMdp& mdp, const SoftResult& soft);

/// Roll one trajectory under policy; stops after a terminal (s,a) pair or at
/// the horizon.
Trajectory rollout(const FiniteMdp& mdp, const Policy& policy, Rng& rng);

}  // namespace irl

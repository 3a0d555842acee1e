#pragma once

#include <string>
#include <vector>

#include "irlkit/maxent.hpp"
#include "irlkit/obs_model.hpp"

namespace irl {

/// Current joint assignment of one trajectory's latent nodes: the state-action
/// chain plus one source label per observation.
struct LatentState {
  std::vector<int> s;              // length T
  std::vector<int> a;              // length T
  std::vector<std::vector<int>> z; // z[t][n] in {0 = subject, 1..num_elements}
};

/// Empirical posterior estimates for one trajectory: per-timestep joint
/// (s,a) marginals, pairwise (s,a,s') occupancies, and per-observation source
/// label posteriors.
struct TrajectoryPosterior {
  std::vector<std::vector<double>> joint;     // joint[t][s*A+a], sums to 1
  std::vector<std::vector<double>> pairwise;  // pairwise[t][(s*A+a)*S+s'], t < T-1
  std::vector<std::vector<std::vector<double>>> z;  // z[t][n][source]
};

enum class SweepMode { Auto, PerNode, WholeTrajectory };

struct SamplerOptions {
  int samples = 2000;       // retained sweeps per trajectory per outer iteration
  int burn_in = 500;        // discarded sweeps before the first estimation
  int reburn = 100;         // discarded sweeps when a warm chain is reused
  int thinning = 1;
  int max_outer_iters = 30;
  double o_tolerance = 1e-3;  // max L1 change of any mean row
  double blend_c = 0.1;
  bool warm_start = true;     // keep chains across outer iterations
  bool update_model = true;   // false: hold O fixed (known observation function)
  SweepMode sweep_mode = SweepMode::Auto;
  std::uint64_t seed = 0;
  std::string diagnostics_path;  // optional per-iteration delimited diagnostics
};

/// Generic node update (Algorithm "Sample"): uniform proposal over the node's
/// domain, accepted with min(1, density ratio), evaluated in log space.
template <typename LogDensity>
int metropolis_step(Rng& rng, int current, int domain_size, LogDensity&& log_density) {
  int proposal = uniform_int(rng, domain_size);
  if (proposal == current) return current;
  double lp_new = log_density(proposal);
  if (lp_new == kNegInf) return current;
  double lp_cur = log_density(current);
  // A zero-density current value accepts any positive-density proposal.
  if (lp_cur == kNegInf || lp_new >= lp_cur) return proposal;
  return std::log(uniform01(rng)) < lp_new - lp_cur ? proposal : current;
}

/// Sweep statistics, for diagnostics and tests.
struct SweepStats {
  long long node_proposals = 0;
  long long node_accepts = 0;
  long long trajectory_proposals = 0;
  long long trajectory_accepts = 0;
};

class TrajectoryChain {
 public:
  TrajectoryChain(const FiniteMdp& mdp, const Policy& soft_policy,
                  const std::vector<std::vector<Observation>>& observations,
                  std::uint64_t seed);

  /// Find a transition-consistent initial trajectory (soft-policy rollout with
  /// a systematic fallback) and set every label to argmax eta.
  void initialize(const DirichletObsModel& model);

  /// One Metropolis-within-Gibbs sweep: every Z node, then s_t, then a_t.
  void gibbs_sweep(const DirichletObsModel& model);

  /// Whole-trajectory block update for (near-)deterministic kernels, where
  /// single-node moves break transition consistency: the chain is redrawn by
  /// forward filtering / backward sampling from its exact conditional given
  /// the current labels, so the move always accepts. Z nodes are still
  /// updated per node.
  void whole_trajectory_sweep(const DirichletObsModel& model);

  void sweep(const DirichletObsModel& model, SweepMode mode);

  const LatentState& state() const { return state_; }
  SweepStats& stats() { return stats_; }
  int length() const { return T_; }

 private:
  double state_log_density(int t, int s) const;
  double action_log_density(int t, int a) const;
  double label_log_density(int t, int n, int z) const;
  double subject_obs_loglik(int t, int s, int a) const;
  void roll_prior(std::vector<int>& s, std::vector<int>& a);
  void ffbs_draw(std::vector<int>& s, std::vector<int>& a);

  const FiniteMdp& mdp_;
  const Policy& policy_;
  const std::vector<std::vector<Observation>>& obs_;
  const DirichletObsModel* model_ = nullptr;  // valid during a sweep
  std::vector<std::vector<std::vector<double>>> log_eta_;  // [t][n][source]
  std::vector<std::vector<double>> log_pi_;  // [t][s*A+a]
  LatentState state_;
  std::vector<std::vector<std::pair<int, double>>> successors_;  // [s*A+a] nonzeros
  SweepStats stats_;
  Rng rng_;
  int T_ = 0;
};

/// Accumulates retained samples into posterior counts.
class PosteriorAccumulator {
 public:
  PosteriorAccumulator(const FiniteMdp& mdp, int num_sources,
                       const std::vector<std::vector<Observation>>& observations);
  void add(const LatentState& state);
  void reset();
  int retained() const { return retained_; }

  /// Normalized empirical frequencies. Requires at least min_retained samples.
  TrajectoryPosterior estimate(int min_retained = 100) const;

 private:
  int S_, A_;
  int retained_ = 0;
  TrajectoryPosterior counts_;
};

/// Expected observation-count tables from the label and trajectory posteriors.
/// Total mass equals the total observation count of the log.
struct AlphaDot {
  std::vector<double> subject;     // [s][a][w]
  std::vector<double> confounder;  // [e][w]
};
AlphaDot accumulate_alpha_dot(const std::vector<TrajectoryPosterior>& posteriors,
                              const ObservationLog& log, const FiniteMdp& mdp);

struct InferenceResult {
  std::vector<TrajectoryPosterior> posteriors;
  DirichletObsModel model;
  bool converged = false;
  int iterations = 0;
};

/// The full inference loop: soft policy from theta, then alternate
/// per-trajectory sampling, posterior estimation, alpha accumulation and
/// blending, until every mean row of O has stabilized.
InferenceResult run_inference(const ObservationLog& log, const DirichletObsModel& prior,
                              const FiniteMdp& mdp, const RewardModel& reward_features,
                              const std::vector<double>& theta,
                              const SamplerOptions& opts);

/// Same loop against a precomputed soft policy.
InferenceResult run_inference(const ObservationLog& log, const DirichletObsModel& prior,
                              const FiniteMdp& mdp, const Policy& soft_policy,
                              const SamplerOptions& opts);

/// Feature expectations under the inferred trajectory distributions; the
/// per-timestep joint marginals are sufficient for per-timestep features.
FeatureExpectations observation_feature_expectations(
    const std::vector<TrajectoryPosterior>& posteriors, const FiniteMdp& mdp,
    const RewardModel& reward);

}  // namespace irl

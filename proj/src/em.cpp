#include "irlkit/em.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace irl {

namespace {

// Enumerate completions of one hidden segment [l, r] and add the expected
// feature counts under Pr(H|Y; theta). Factors shared by every completion
// cancel in the normalization, so only the segment-local ones are multiplied.
void add_segment_expectations(const FiniteMdp& mdp, const RewardModel& reward,
                              const Policy& soft, const OccludedDemo& demo, int demo_index,
                              int l, int r, std::vector<double>& feature_counts) {
  const int A = mdp.num_actions, K = reward.num_features;
  std::vector<int> states;
  if (demo.occluded_states.empty()) {
    states.resize(mdp.num_states);
    for (int s = 0; s < mdp.num_states; ++s) states[s] = s;
  } else {
    states = demo.occluded_states;
  }

  const int len = r - l + 1;
  std::vector<std::pair<int, int>> current(len);
  std::vector<std::vector<double>> segment_counts;  // per completion
  std::vector<double> weights;

  std::function<void(int, double)> recurse = [&](int t, double weight) {
    if (t > r) {
      if (r + 1 < static_cast<int>(demo.steps.size())) {
        auto [s_next, a_next] = *demo.steps[r + 1];
        (void)a_next;
        weight *= mdp.trans(current[r - l].first, current[r - l].second, s_next);
      }
      if (weight <= 0.0) return;
      std::vector<double> counts(K, 0.0);
      for (const auto& [s, a] : current)
        for (int k = 0; k < K; ++k) counts[k] += reward.feature(s, a, k, A);
      segment_counts.push_back(std::move(counts));
      weights.push_back(weight);
      return;
    }
    for (int s : states) {
      double in;
      if (t == 0)
        in = mdp.start[s];
      else if (t == l)
        in = mdp.trans(demo.steps[t - 1]->first, demo.steps[t - 1]->second, s);
      else
        in = mdp.trans(current[t - 1 - l].first, current[t - 1 - l].second, s);
      if (in <= 0.0) continue;
      for (int a = 0; a < A; ++a) {
        double p = soft.prob_at(t, s, a, A);
        if (p <= 0.0) continue;
        current[t - l] = {s, a};
        recurse(t + 1, weight * in * p);
      }
    }
  };
  recurse(l, 1.0);

  double total = 0.0;
  for (double w : weights) total += w;
  if (total <= 0.0)
    throw InconsistentDemo("latent_feature_expectations: trajectory " +
                           std::to_string(demo_index) +
                           " admits no transition-consistent completion");
  for (std::size_t i = 0; i < weights.size(); ++i)
    for (int k = 0; k < K; ++k)
      feature_counts[k] += weights[i] / total * segment_counts[i][k];
}

// Sampler fallback for long hidden segments: a pinning vocabulary with one
// symbol per (s,a) and point-mass subject emission rows recovers the same
// conditional up to Monte Carlo error.
std::vector<double> sampled_demo_expectations(const FiniteMdp& mdp,
                                              const RewardModel& reward,
                                              const Policy& soft, const OccludedDemo& demo,
                                              const SamplerOptions& sampler_opts) {
  const int A = mdp.num_actions;
  const int W = mdp.num_states * A;
  ObservationLog log;
  log.vocabulary.names.resize(W);
  for (int w = 0; w < W; ++w) log.vocabulary.names[w] = "pin_" + std::to_string(w);
  log.trajectories.resize(1);
  auto& traj = log.trajectories[0];
  traj.resize(demo.steps.size());
  for (std::size_t t = 0; t < demo.steps.size(); ++t)
    if (demo.steps[t]) {
      auto [s, a] = *demo.steps[t];
      traj[t].push_back({s * A + a, {1.0}});
    }
  DirichletObsModel model = DirichletObsModel::uniform(mdp.num_states, A, W, 0, 0.0);
  for (int s = 0; s < mdp.num_states; ++s)
    for (int a = 0; a < A; ++a)
      model.subject_alpha[model.subject_index(s, a) + s * A + a] = 1e9;
  model.refresh_means();

  SamplerOptions opts = sampler_opts;
  opts.update_model = false;
  InferenceResult result = run_inference(log, model, mdp, soft, opts);
  return observation_feature_expectations(result.posteriors, mdp, reward).values;
}

}  // namespace

FeatureExpectations latent_feature_expectations(const std::vector<OccludedDemo>& demos,
                                                const FiniteMdp& mdp,
                                                const RewardModel& reward,
                                                int enumeration_cap,
                                                const SamplerOptions& sampler_opts) {
  check(!demos.empty(), "latent_feature_expectations: empty demonstration set");
  const int A = mdp.num_actions, K = reward.num_features;
  SoftResult soft = soft_value_iteration(mdp, reward);

  FeatureExpectations out;
  out.values.assign(K, 0.0);
  out.normalizer = static_cast<int>(demos.size());

  for (std::size_t i = 0; i < demos.size(); ++i) {
    const OccludedDemo& demo = demos[i];
    bool any_observed = false;
    int longest_gap = 0, gap = 0;
    for (const auto& step : demo.steps) {
      if (step) {
        any_observed = true;
        gap = 0;
      } else {
        longest_gap = std::max(longest_gap, ++gap);
      }
    }
    check(any_observed, "OccludedDemo: no observed timestep");

    if (longest_gap > enumeration_cap) {
      SamplerOptions opts = sampler_opts;
      opts.seed = derive_seed(sampler_opts.seed, i);
      std::vector<double> counts =
          sampled_demo_expectations(mdp, reward, soft.policy, demo, opts);
      for (int k = 0; k < K; ++k) out.values[k] += counts[k];
      continue;
    }

    std::vector<double> counts(K, 0.0);
    for (std::size_t t = 0; t < demo.steps.size(); ++t) {
      if (!demo.steps[t]) continue;
      auto [s, a] = *demo.steps[t];
      for (int k = 0; k < K; ++k) counts[k] += reward.feature(s, a, k, A);
      if (t + 1 < demo.steps.size() && demo.steps[t + 1] &&
          mdp.trans(s, a, demo.steps[t + 1]->first) <= 0.0)
        throw InconsistentDemo("latent_feature_expectations: trajectory " +
                               std::to_string(i) + " has an impossible observed move");
    }
    int t = 0;
    const int T = static_cast<int>(demo.steps.size());
    while (t < T) {
      if (demo.steps[t]) {
        ++t;
        continue;
      }
      int l = t;
      while (t < T && !demo.steps[t]) ++t;
      add_segment_expectations(mdp, reward, soft.policy, demo, static_cast<int>(i), l,
                               t - 1, counts);
    }
    for (int k = 0; k < K; ++k) out.values[k] += counts[k];
  }
  for (double& v : out.values) v /= out.normalizer;
  return out;
}

namespace {

// Shared EM driver; the E-step is supplied by the caller.
EmResult em_restarts(
    const FiniteMdp& mdp, const RewardModel& reward_features, const EmOptions& opts,
    const std::function<FeatureExpectations(const std::vector<double>&, int restart,
                                            int iteration)>& e_step) {
  check(opts.restarts >= 1, "run_em: restarts must be >= 1");
  const int K = reward_features.num_features;
  EmResult best;
  bool have_best = false;

  for (int r = 0; r < opts.restarts; ++r) {
    Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(r)));
    std::vector<double> theta(K);
    for (double& th : theta) th = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);

    EmResult result;
    for (int it = 0; it < opts.max_em_iters; ++it) {
      FeatureExpectations target = e_step(theta, r, it);
      FitOptions fit_opts = opts.fit;
      fit_opts.initial_theta = theta;
      FitResult fit = fit_weights(mdp, reward_features, target, fit_opts);
      double delta = 0.0;
      for (int k = 0; k < K; ++k)
        delta = std::max(delta, std::abs(fit.weights[k] - theta[k]));
      theta = fit.weights;
      result.theta_deltas.push_back(delta);
      result.iterations = it + 1;
      if (delta < opts.em_tolerance) {
        result.converged = true;
        break;
      }
    }
    result.weights = theta;
    SoftResult soft = soft_value_iteration(mdp, reward_features.with_weights(theta));
    result.policy = soft.policy;
    result.entropy = causal_entropy(mdp, result.policy);
    if (!have_best || result.entropy > best.entropy) {
      best = std::move(result);
      have_best = true;
    }
  }
  return best;
}

}  // namespace

EmResult run_em(const std::vector<OccludedDemo>& demos, const FiniteMdp& mdp,
                const RewardModel& reward_features, const EmOptions& opts) {
  check(!demos.empty(), "run_em: empty demonstration set");
  return em_restarts(mdp, reward_features, opts,
                     [&](const std::vector<double>& theta, int r, int it) {
                       SamplerOptions sopts = opts.sampler;
                       sopts.seed = derive_seed(opts.seed, r, it);
                       return latent_feature_expectations(
                           demos, mdp, reward_features.with_weights(theta),
                           opts.enumeration_cap, sopts);
                     });
}

EmResult run_em(const ObservationLog& log, const DirichletObsModel& prior,
                const FiniteMdp& mdp, const RewardModel& reward_features,
                const EmOptions& opts) {
  check(!log.trajectories.empty(), "run_em: empty observation log");
  return em_restarts(mdp, reward_features, opts,
                     [&](const std::vector<double>& theta, int r, int it) {
                       SamplerOptions sopts = opts.sampler;
                       sopts.seed = derive_seed(opts.seed, r, it);
                       InferenceResult inf =
                           run_inference(log, prior, mdp, reward_features, theta, sopts);
                       return observation_feature_expectations(inf.posteriors, mdp,
                                                               reward_features);
                     });
}

}  // namespace irl

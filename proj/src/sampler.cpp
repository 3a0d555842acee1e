#include "irlkit/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace irl {

namespace {

double log0(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

}  // namespace

TrajectoryChain::TrajectoryChain(const FiniteMdp& mdp, const Policy& soft_policy,
                                 const std::vector<std::vector<Observation>>& observations,
                                 std::uint64_t seed)
    : mdp_(mdp), policy_(soft_policy), obs_(observations), rng_(seed) {
  T_ = static_cast<int>(obs_.size());
  check(T_ >= 1, "TrajectoryChain: empty trajectory");
  const int A = mdp_.num_actions;
  log_pi_.resize(T_);
  for (int t = 0; t < T_; ++t) {
    const std::vector<double>& table = policy_.table(t);
    log_pi_[t].resize(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) log_pi_[t][i] = log0(table[i]);
  }
  log_eta_.resize(T_);
  for (int t = 0; t < T_; ++t) {
    log_eta_[t].resize(obs_[t].size());
    for (std::size_t n = 0; n < obs_[t].size(); ++n) {
      log_eta_[t][n].resize(obs_[t][n].eta.size());
      for (std::size_t z = 0; z < obs_[t][n].eta.size(); ++z)
        log_eta_[t][n][z] = log0(obs_[t][n].eta[z]);
    }
  }
  (void)A;
}

void TrajectoryChain::roll_prior(std::vector<int>& s, std::vector<int>& a) {
  const int A = mdp_.num_actions, S = mdp_.num_states;
  s.resize(T_);
  a.resize(T_);
  int cur = sample_categorical(rng_, mdp_.start);
  for (int t = 0; t < T_; ++t) {
    s[t] = cur;
    const std::vector<double>& table = policy_.table(t);
    a[t] = sample_categorical(
        rng_, std::span<const double>(&table[static_cast<std::size_t>(cur) * A], A));
    if (t + 1 < T_) {
      const double* row =
          &mdp_.transition[(static_cast<std::size_t>(cur) * A + a[t]) * S];
      cur = sample_categorical(rng_, std::span<const double>(row, S));
    }
  }
}

void TrajectoryChain::initialize(const DirichletObsModel& model) {
  (void)model;
  roll_prior(state_.s, state_.a);

  // Rollouts are transition-consistent by construction; the systematic search
  // below only fires for degenerate start distributions or kernels.
  bool ok = mdp_.start[state_.s[0]] > 0.0;
  for (int t = 0; ok && t + 1 < T_; ++t)
    ok = mdp_.trans(state_.s[t], state_.a[t], state_.s[t + 1]) > 0.0;
  if (!ok) {
    std::vector<int> s(T_), a(T_);
    auto dfs = [&](auto&& self, int t, int cur) -> bool {
      s[t] = cur;
      for (int act = 0; act < mdp_.num_actions; ++act) {
        a[t] = act;
        if (t + 1 == T_) return true;
        for (int s2 = 0; s2 < mdp_.num_states; ++s2)
          if (mdp_.trans(cur, act, s2) > 0.0 && self(self, t + 1, s2)) return true;
      }
      return false;
    };
    bool found = false;
    for (int s0 = 0; s0 < mdp_.num_states && !found; ++s0)
      if (mdp_.start[s0] > 0.0) found = dfs(dfs, 0, s0);
    if (!found)
      throw InconsistentDemo("initialize_chain: no consistent trajectory of this length");
    state_.s = s;
    state_.a = a;
  }

  state_.z.resize(T_);
  for (int t = 0; t < T_; ++t) {
    state_.z[t].resize(obs_[t].size());
    for (std::size_t n = 0; n < obs_[t].size(); ++n) {
      const auto& eta = obs_[t][n].eta;
      state_.z[t][n] = static_cast<int>(
          std::max_element(eta.begin(), eta.end()) - eta.begin());
    }
  }
}

double TrajectoryChain::subject_obs_loglik(int t, int s, int a) const {
  double acc = 0.0;
  const auto& zs = state_.z[t];
  for (std::size_t n = 0; n < zs.size(); ++n)
    if (zs[n] == 0) acc += model_->subject_logp(s, a, obs_[t][n].omega);
  return acc;
}

double TrajectoryChain::state_log_density(int t, int s) const {
  const int A = mdp_.num_actions;
  double lp = log_pi_[t][static_cast<std::size_t>(s) * A + state_.a[t]];
  lp += t == 0 ? log0(mdp_.start[s])
               : log0(mdp_.trans(state_.s[t - 1], state_.a[t - 1], s));
  if (t + 1 < T_) lp += log0(mdp_.trans(s, state_.a[t], state_.s[t + 1]));
  if (lp == kNegInf) return lp;
  return lp + subject_obs_loglik(t, s, state_.a[t]);
}

double TrajectoryChain::action_log_density(int t, int a) const {
  const int A = mdp_.num_actions;
  double lp = log_pi_[t][static_cast<std::size_t>(state_.s[t]) * A + a];
  if (t + 1 < T_) lp += log0(mdp_.trans(state_.s[t], a, state_.s[t + 1]));
  if (lp == kNegInf) return lp;
  return lp + subject_obs_loglik(t, state_.s[t], a);
}

double TrajectoryChain::label_log_density(int t, int n, int z) const {
  double lp = log_eta_[t][n][z];
  if (lp == kNegInf) return lp;
  int w = obs_[t][n].omega;
  return lp + (z == 0 ? model_->subject_logp(state_.s[t], state_.a[t], w)
                      : model_->confounder_logp(z - 1, w));
}

void TrajectoryChain::gibbs_sweep(const DirichletObsModel& model) {
  model_ = &model;
  const int sources = model.num_elements + 1;
  for (int t = 0; t < T_; ++t) {
    for (std::size_t n = 0; n < state_.z[t].size(); ++n) {
      int before = state_.z[t][n];
      state_.z[t][n] = metropolis_step(
          rng_, before, sources, [&](int z) { return label_log_density(t, (int)n, z); });
      ++stats_.node_proposals;
      stats_.node_accepts += state_.z[t][n] != before;
    }
    int s_before = state_.s[t];
    state_.s[t] = metropolis_step(rng_, s_before, mdp_.num_states,
                                  [&](int s) { return state_log_density(t, s); });
    ++stats_.node_proposals;
    stats_.node_accepts += state_.s[t] != s_before;

    int a_before = state_.a[t];
    state_.a[t] = metropolis_step(rng_, a_before, mdp_.num_actions,
                                  [&](int a) { return action_log_density(t, a); });
    ++stats_.node_proposals;
    stats_.node_accepts += state_.a[t] != a_before;
  }
  model_ = nullptr;
}

void TrajectoryChain::ffbs_draw(std::vector<int>& s, std::vector<int>& a) {
  const int S = mdp_.num_states, A = mdp_.num_actions;
  const int W = model_->num_symbols;
  const std::size_t SA = static_cast<std::size_t>(S) * A;

  // Sparse successor lists, built once: most kernels here have few outcomes.
  if (successors_.empty()) {
    successors_.resize(SA);
    for (std::size_t sa = 0; sa < SA; ++sa)
      for (int s2 = 0; s2 < S; ++s2) {
        double p = mdp_.transition[sa * S + s2];
        if (p > 0.0) successors_[sa].emplace_back(s2, p);
      }
  }

  // Subject-labeled symbol counts per step turn the per-(s,a) observation
  // log-likelihood into one dot product with the cached log means.
  std::vector<double> counts(static_cast<std::size_t>(T_) * W, 0.0);
  for (int t = 0; t < T_; ++t)
    for (std::size_t n = 0; n < state_.z[t].size(); ++n)
      if (state_.z[t][n] == 0) counts[static_cast<std::size_t>(t) * W + obs_[t][n].omega] += 1.0;

  // Forward messages over (s_t, a_t), normalized per step; local potentials
  // combine the policy, the kernel, and the subject-labeled observations.
  std::vector<std::vector<double>> alpha(T_, std::vector<double>(SA, kNegInf));
  std::vector<double> incoming(S);
  for (int st = 0; st < S; ++st) incoming[st] = log0(mdp_.start[st]);
  for (int t = 0; t < T_; ++t) {
    const double* cnt = &counts[static_cast<std::size_t>(t) * W];
    for (int st = 0; st < S; ++st) {
      if (incoming[st] == kNegInf) continue;
      for (int act = 0; act < A; ++act) {
        std::size_t sa = static_cast<std::size_t>(st) * A + act;
        double lp = log_pi_[t][sa];
        if (lp == kNegInf) continue;
        const double* row = &model_->subject_log_mean[sa * W];
        double obs_lp = 0.0;
        for (int w = 0; w < W; ++w)
          if (cnt[w] > 0.0) obs_lp += cnt[w] * row[w];
        alpha[t][sa] = incoming[st] + lp + obs_lp;
      }
    }
    double peak = *std::max_element(alpha[t].begin(), alpha[t].end());
    check(peak > kNegInf, "ffbs_draw: no consistent trajectory");
    for (double& x : alpha[t]) x -= peak;
    if (t + 1 == T_) break;
    std::fill(incoming.begin(), incoming.end(), 0.0);
    for (std::size_t sa = 0; sa < SA; ++sa) {
      double lp = alpha[t][sa];
      if (lp == kNegInf) continue;
      double p = std::exp(lp);
      for (auto [s2, tp] : successors_[sa]) incoming[s2] += p * tp;
    }
    for (int s2 = 0; s2 < S; ++s2) incoming[s2] = log0(incoming[s2]);
  }

  s.resize(T_);
  a.resize(T_);
  std::vector<double> weights(SA);
  for (int t = T_ - 1; t >= 0; --t) {
    for (std::size_t i = 0; i < SA; ++i) {
      double lp = alpha[t][i];
      if (lp != kNegInf && t + 1 < T_)
        lp += log0(mdp_.trans(static_cast<int>(i) / A, static_cast<int>(i) % A, s[t + 1]));
      weights[i] = lp == kNegInf ? 0.0 : std::exp(lp);
    }
    double total = 0.0;
    for (double w : weights) total += w;
    check(total > 0.0, "ffbs_draw: dead end in backward pass");
    for (double& w : weights) w /= total;
    int pick = sample_categorical(rng_, weights);
    s[t] = pick / A;
    a[t] = pick % A;
  }
}

void TrajectoryChain::whole_trajectory_sweep(const DirichletObsModel& model) {
  model_ = &model;
  // Exact conditional draw of the whole (s, a) chain given the labels; the
  // Hastings ratio of a full-conditional proposal is one, so always accept.
  ffbs_draw(state_.s, state_.a);
  ++stats_.trajectory_proposals;
  ++stats_.trajectory_accepts;
  const int sources = model.num_elements + 1;
  for (int t = 0; t < T_; ++t)
    for (std::size_t n = 0; n < state_.z[t].size(); ++n) {
      int before = state_.z[t][n];
      state_.z[t][n] = metropolis_step(
          rng_, before, sources, [&](int z) { return label_log_density(t, (int)n, z); });
      ++stats_.node_proposals;
      stats_.node_accepts += state_.z[t][n] != before;
    }
  model_ = nullptr;
}

void TrajectoryChain::sweep(const DirichletObsModel& model, SweepMode mode) {
  if (mode == SweepMode::WholeTrajectory)
    whole_trajectory_sweep(model);
  else
    gibbs_sweep(model);
}

PosteriorAccumulator::PosteriorAccumulator(
    const FiniteMdp& mdp, int num_sources,
    const std::vector<std::vector<Observation>>& observations)
    : S_(mdp.num_states), A_(mdp.num_actions) {
  const int T = static_cast<int>(observations.size());
  counts_.joint.assign(T, std::vector<double>(static_cast<std::size_t>(S_) * A_, 0.0));
  counts_.pairwise.assign(
      std::max(0, T - 1),
      std::vector<double>(static_cast<std::size_t>(S_) * A_ * S_, 0.0));
  counts_.z.resize(T);
  for (int t = 0; t < T; ++t)
    counts_.z[t].assign(observations[t].size(), std::vector<double>(num_sources, 0.0));
}

void PosteriorAccumulator::add(const LatentState& state) {
  const int T = static_cast<int>(counts_.joint.size());
  for (int t = 0; t < T; ++t) {
    std::size_t sa = static_cast<std::size_t>(state.s[t]) * A_ + state.a[t];
    counts_.joint[t][sa] += 1.0;
    if (t + 1 < T) counts_.pairwise[t][sa * S_ + state.s[t + 1]] += 1.0;
    for (std::size_t n = 0; n < state.z[t].size(); ++n)
      counts_.z[t][n][state.z[t][n]] += 1.0;
  }
  ++retained_;
}

void PosteriorAccumulator::reset() {
  retained_ = 0;
  for (auto& v : counts_.joint) std::fill(v.begin(), v.end(), 0.0);
  for (auto& v : counts_.pairwise) std::fill(v.begin(), v.end(), 0.0);
  for (auto& vv : counts_.z)
    for (auto& v : vv) std::fill(v.begin(), v.end(), 0.0);
}

TrajectoryPosterior PosteriorAccumulator::estimate(int min_retained) const {
  if (retained_ < min_retained)
    throw InvalidInput("estimate_posteriors: fewer retained samples than required");
  TrajectoryPosterior out = counts_;
  double inv = 1.0 / retained_;
  for (auto& v : out.joint)
    for (double& x : v) x *= inv;
  for (auto& v : out.pairwise)
    for (double& x : v) x *= inv;
  for (auto& vv : out.z)
    for (auto& v : vv)
      for (double& x : v) x *= inv;
  return out;
}

AlphaDot accumulate_alpha_dot(const std::vector<TrajectoryPosterior>& posteriors,
                              const ObservationLog& log, const FiniteMdp& mdp) {
  check(posteriors.size() == log.trajectories.size(),
        "accumulate_alpha_dot: posterior/log count mismatch");
  const int S = mdp.num_states, A = mdp.num_actions, W = log.vocabulary.size();
  const int sources = log.num_sources();
  AlphaDot out;
  out.subject.assign(static_cast<std::size_t>(S) * A * W, 0.0);
  out.confounder.assign(static_cast<std::size_t>(sources - 1) * W, 0.0);

  std::vector<double> subject_mass(W);
  for (std::size_t i = 0; i < posteriors.size(); ++i) {
    const auto& post = posteriors[i];
    const auto& traj = log.trajectories[i];
    for (std::size_t t = 0; t < traj.size(); ++t) {
      std::fill(subject_mass.begin(), subject_mass.end(), 0.0);
      for (std::size_t n = 0; n < traj[t].size(); ++n) {
        const int w = traj[t][n].omega;
        subject_mass[w] += post.z[t][n][0];
        for (int e = 1; e < sources; ++e)
          out.confounder[static_cast<std::size_t>(e - 1) * W + w] += post.z[t][n][e];
      }
      const std::vector<double>& joint = post.joint[t];
      for (int w = 0; w < W; ++w) {
        if (subject_mass[w] == 0.0) continue;
        for (std::size_t sa = 0; sa < joint.size(); ++sa)
          if (joint[sa] > 0.0) out.subject[sa * W + w] += subject_mass[w] * joint[sa];
      }
    }
  }
  return out;
}

FeatureExpectations observation_feature_expectations(
    const std::vector<TrajectoryPosterior>& posteriors, const FiniteMdp& mdp,
    const RewardModel& reward) {
  const int A = mdp.num_actions, K = reward.num_features;
  FeatureExpectations out;
  out.values.assign(K, 0.0);
  out.normalizer = static_cast<int>(posteriors.size());
  check(out.normalizer > 0, "observation_feature_expectations: no posteriors");
  for (const auto& post : posteriors)
    for (const auto& joint : post.joint)
      for (int s = 0; s < mdp.num_states; ++s)
        for (int a = 0; a < A; ++a) {
          double p = joint[static_cast<std::size_t>(s) * A + a];
          if (p == 0.0) continue;
          for (int k = 0; k < K; ++k)
            out.values[k] += p * reward.feature(s, a, k, A);
        }
  for (double& v : out.values) v /= out.normalizer;
  return out;
}

namespace {

double max_row_l1_change(const DirichletObsModel& before, const DirichletObsModel& after) {
  double delta = 0.0;
  auto rows = [&](const std::vector<double>& a, const std::vector<double>& b, int W) {
    for (std::size_t off = 0; off < a.size(); off += W) {
      double l1 = 0.0;
      for (int w = 0; w < W; ++w) l1 += std::abs(a[off + w] - b[off + w]);
      delta = std::max(delta, l1);
    }
  };
  rows(before.subject_mean, after.subject_mean, before.num_symbols);
  rows(before.confounder_mean, after.confounder_mean, before.num_symbols);
  return delta;
}

void check_mass_conservation(const AlphaDot& dot, const ObservationLog& log) {
  double total = 0.0;
  for (double x : dot.subject) total += x;
  for (double x : dot.confounder) total += x;
  double expected = log.total_observations();
  if (std::abs(total - expected) > 1e-6 * std::max(1.0, expected))
    throw std::logic_error("alpha_dot label mass not conserved");
}

}  // namespace

InferenceResult run_inference(const ObservationLog& log, const DirichletObsModel& prior,
                              const FiniteMdp& mdp, const Policy& soft_policy,
                              const SamplerOptions& opts) {
  log.validate();
  check(prior.num_elements == log.num_sources() - 1,
        "run_inference: prior/log element count mismatch");
  check(prior.num_symbols == log.vocabulary.size(),
        "run_inference: prior/log vocabulary mismatch");

  InferenceResult out;
  out.model = prior;
  out.model.refresh_means();

  // The block sweep redraws the whole chain from its exact conditional, so it
  // dominates single-node moves whenever the state space is small enough to
  // filter over — which covers every domain here.
  SweepMode mode = opts.sweep_mode;
  if (mode == SweepMode::Auto) mode = SweepMode::WholeTrajectory;

  const int n_traj = static_cast<int>(log.trajectories.size());
  std::vector<TrajectoryChain> chains;
  chains.reserve(n_traj);
  std::vector<PosteriorAccumulator> accs;
  accs.reserve(n_traj);
  for (int i = 0; i < n_traj; ++i) {
    chains.emplace_back(mdp, soft_policy, log.trajectories[i],
                        derive_seed(opts.seed, static_cast<std::uint64_t>(i)));
    accs.emplace_back(mdp, log.num_sources(), log.trajectories[i]);
  }

  std::ofstream diag;
  if (!opts.diagnostics_path.empty()) diag.open(opts.diagnostics_path);
  if (diag.is_open())
    diag << "iteration\to_delta\tnode_accept_rate\ttraj_accept_rate\tretained\n";

  out.posteriors.resize(n_traj);
  for (int iter = 0; iter < opts.max_outer_iters; ++iter) {
    SweepStats iter_stats;
    int retained = 0;
    for (int i = 0; i < n_traj; ++i) {
      TrajectoryChain& chain = chains[i];
      chain.stats() = SweepStats{};
      int burn = opts.burn_in;
      if (iter == 0 || !opts.warm_start)
        chain.initialize(out.model);
      else
        burn = opts.reburn;
      for (int b = 0; b < burn; ++b) chain.sweep(out.model, mode);
      accs[i].reset();
      for (int j = 0; j < opts.samples; ++j) {
        chain.sweep(out.model, mode);
        if (j % opts.thinning == 0) accs[i].add(chain.state());
      }
      out.posteriors[i] = accs[i].estimate(std::min(100, opts.samples));
      retained += accs[i].retained();
      iter_stats.node_proposals += chain.stats().node_proposals;
      iter_stats.node_accepts += chain.stats().node_accepts;
      iter_stats.trajectory_proposals += chain.stats().trajectory_proposals;
      iter_stats.trajectory_accepts += chain.stats().trajectory_accepts;
    }

    AlphaDot dot = accumulate_alpha_dot(out.posteriors, log, mdp);
    check_mass_conservation(dot, log);
    out.iterations = iter + 1;

    double delta = 0.0;
    if (opts.update_model) {
      DirichletObsModel before = out.model;
      out.model.subject_alpha =
          blend_alpha(out.model.subject_alpha, dot.subject, opts.blend_c);
      out.model.confounder_alpha =
          blend_alpha(out.model.confounder_alpha, dot.confounder, opts.blend_c);
      out.model.refresh_means();
      delta = max_row_l1_change(before, out.model);
    }

    if (diag.is_open()) {
      auto rate = [](long long acc, long long total) {
        return total > 0 ? static_cast<double>(acc) / total : 0.0;
      };
      diag << (iter + 1) << '\t' << delta << '\t'
           << rate(iter_stats.node_accepts, iter_stats.node_proposals) << '\t'
           << rate(iter_stats.trajectory_accepts, iter_stats.trajectory_proposals)
           << '\t' << retained << '\n';
    }

    if (!opts.update_model || delta < opts.o_tolerance) {
      out.converged = true;
      break;
    }
  }
  return out;
}

InferenceResult run_inference(const ObservationLog& log, const DirichletObsModel& prior,
                              const FiniteMdp& mdp, const RewardModel& reward_features,
                              const std::vector<double>& theta,
                              const SamplerOptions& opts) {
  for (double th : theta) check(std::isfinite(th), "run_inference: non-finite theta");
  SoftResult soft = soft_value_iteration(mdp, reward_features.with_weights(theta));
  return run_inference(log, prior, mdp, soft.policy, opts);
}

}  // namespace irl

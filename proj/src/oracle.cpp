#include "irlkit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace irl {

TrajectoryPosterior enumerate_posterior(const FiniteMdp& mdp, const Policy& soft_policy,
                                        const std::vector<std::vector<Observation>>& obs,
                                        const DirichletObsModel& model) {
  const int T = static_cast<int>(obs.size());
  const int S = mdp.num_states, A = mdp.num_actions;
  check(T >= 1, "enumerate_posterior: empty trajectory");
  double sequences = 1.0;
  for (int t = 0; t < T; ++t) sequences *= static_cast<double>(S) * A;
  check(sequences <= 2e7, "enumerate_posterior: instance too large to enumerate");

  Policy stochastic = soft_policy.kind == Policy::Kind::Stochastic
                          ? soft_policy
                          : soft_policy.to_stochastic(S, A);

  TrajectoryPosterior post;
  post.joint.assign(T, std::vector<double>(static_cast<std::size_t>(S) * A, 0.0));
  post.pairwise.assign(std::max(0, T - 1),
                       std::vector<double>(static_cast<std::size_t>(S) * A * S, 0.0));
  post.z.resize(T);
  for (int t = 0; t < T; ++t) {
    post.z[t].resize(obs[t].size());
    for (auto& row : post.z[t]) row.assign(model.num_elements + 1, 0.0);
  }

  // Per-observation mixture likelihood given the subject at (s, a): the label
  // marginalizes out, and its conditional posterior is the normalized terms.
  auto mixture = [&](int t, std::size_t n, int s, int a, std::vector<double>* terms) {
    const Observation& o = obs[t][n];
    double total = o.eta[0] * model.subject_p(s, a, o.omega);
    if (terms) (*terms)[0] = total;
    for (int e = 0; e < model.num_elements; ++e) {
      double term = o.eta[e + 1] * model.confounder_p(e, o.omega);
      if (terms) (*terms)[e + 1] = term;
      total += term;
    }
    return total;
  };

  std::vector<std::pair<int, int>> seq(T);
  double normalizer = 0.0;
  std::function<void(int, double)> recurse = [&](int t, double weight) {
    if (weight <= 0.0) return;
    if (t == T) {
      normalizer += weight;
      std::vector<double> terms(model.num_elements + 1);
      for (int u = 0; u < T; ++u) {
        auto [s, a] = seq[u];
        post.joint[u][static_cast<std::size_t>(s) * A + a] += weight;
        if (u + 1 < T)
          post.pairwise[u][(static_cast<std::size_t>(s) * A + a) * S +
                           seq[u + 1].first] += weight;
        for (std::size_t n = 0; n < obs[u].size(); ++n) {
          double total = mixture(u, n, s, a, &terms);
          for (int z = 0; z <= model.num_elements; ++z)
            post.z[u][n][z] += weight * terms[z] / total;
        }
      }
      return;
    }
    for (int s = 0; s < S; ++s) {
      double in = t == 0 ? mdp.start[s]
                         : mdp.trans(seq[t - 1].first, seq[t - 1].second, s);
      if (in <= 0.0) continue;
      for (int a = 0; a < A; ++a) {
        double p = in * stochastic.prob_at(t, s, a, A);
        if (p <= 0.0) continue;
        for (std::size_t n = 0; n < obs[t].size() && p > 0.0; ++n)
          p *= mixture(t, n, s, a, nullptr);
        seq[t] = {s, a};
        recurse(t + 1, weight * p);
      }
    }
  };
  recurse(0, 1.0);
  check(normalizer > 0.0, "enumerate_posterior: zero-probability observation log");

  for (auto& row : post.joint)
    for (double& v : row) v /= normalizer;
  for (auto& row : post.pairwise)
    for (double& v : row) v /= normalizer;
  for (auto& traj : post.z)
    for (auto& row : traj)
      for (double& v : row) v /= normalizer;
  return post;
}

namespace {

double tv(const std::vector<double>& a, const std::vector<double>& b) {
  check(a.size() == b.size(), "posterior_total_variation: shape mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum / 2.0;
}

}  // namespace

double posterior_total_variation(const TrajectoryPosterior& a,
                                 const TrajectoryPosterior& b) {
  check(a.joint.size() == b.joint.size() && a.pairwise.size() == b.pairwise.size() &&
            a.z.size() == b.z.size(),
        "posterior_total_variation: length mismatch");
  double worst = 0.0;
  for (std::size_t t = 0; t < a.joint.size(); ++t)
    worst = std::max(worst, tv(a.joint[t], b.joint[t]));
  for (std::size_t t = 0; t < a.pairwise.size(); ++t)
    worst = std::max(worst, tv(a.pairwise[t], b.pairwise[t]));
  for (std::size_t t = 0; t < a.z.size(); ++t)
    for (std::size_t n = 0; n < a.z[t].size(); ++n)
      worst = std::max(worst, tv(a.z[t][n], b.z[t][n]));
  return worst;
}

}  // namespace irl

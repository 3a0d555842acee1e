#include <doctest.h>

#include <cmath>

#include "irlkit/oracle.hpp"
#include "irlkit/sampler.hpp"
#include "oracles.hpp"

using namespace irl;

namespace {

// Shared observation log on the tiny stochastic instance: one element, three
// symbols, mixed-confidence eta.
ObservationLog tiny_log() {
  ObservationLog log;
  log.vocabulary.names = {"w0", "w1", "w2"};
  log.element_names = {"e0"};
  log.trajectories = {{{{0, {0.9, 0.1}}, {1, {0.5, 0.5}}},
                      {{2, {0.7, 0.3}}},
                      {{1, {0.2, 0.8}}, {0, {0.6, 0.4}}, {2, {0.5, 0.5}}}}};
  return log;
}

DirichletObsModel tiny_model() {
  DirichletObsModel model = DirichletObsModel::uniform(2, 2, 3, 1, 1.0);
  model.subject_alpha = {5, 1, 1, 1, 5, 1, 1, 1, 5, 2, 2, 5};
  model.confounder_alpha = {1, 3, 1};
  model.refresh_means();
  return model;
}

}  // namespace

TEST_CASE("metropolis_step: self-proposals and dominant proposals") {
  Rng rng(5);
  // Density ratio 2 always accepts the better value.
  int accepted = 0;
  for (int i = 0; i < 1000; ++i) {
    int next = metropolis_step(rng, 0, 2, [](int v) { return v == 1 ? std::log(2.0) : 0.0; });
    accepted += next == 1;
  }
  // Proposal hits value 1 half the time and always accepts it.
  CHECK(accepted > 400);
  CHECK(accepted < 600);
}

TEST_CASE("metropolis_step: chain occupancy matches the target density") {
  Rng rng(6);
  std::vector<double> target = {0.8, 0.2};
  int value = 0;
  std::vector<int> occupancy(2, 0);
  for (int i = 0; i < 100000; ++i) {
    value = metropolis_step(rng, value, 2, [&](int v) { return std::log(target[v]); });
    ++occupancy[value];
  }
  CHECK(std::abs(occupancy[0] / 100000.0 - 0.8) <= 0.02);
}

TEST_CASE("metropolis_step: zero-density current value escapes immediately") {
  Rng rng(7);
  int moved = 0;
  for (int i = 0; i < 200; ++i) {
    int next = metropolis_step(rng, 0, 2, [](int v) { return v == 0 ? kNegInf : 0.0; });
    moved += next == 1;
  }
  // Every proposal of value 1 (half of them) must be accepted.
  CHECK(moved > 60);
}

TEST_CASE("sampler matches exact enumeration on the stochastic instance") {
  auto [mdp, reward] = oracle::tiny_stochastic();
  SoftResult soft = soft_value_iteration(mdp, reward);
  ObservationLog log = tiny_log();
  DirichletObsModel model = tiny_model();

  SamplerOptions opts;
  opts.samples = 6000;
  opts.burn_in = 600;
  opts.update_model = false;
  opts.sweep_mode = SweepMode::PerNode;
  opts.seed = 71;
  InferenceResult result = run_inference(log, model, mdp, soft.policy, opts);
  TrajectoryPosterior exact =
      enumerate_posterior(mdp, soft.policy, log.trajectories[0], model);
  CHECK(posterior_total_variation(result.posteriors[0], exact) <= 0.05);
}

TEST_CASE("whole-trajectory sampler matches enumeration on the deterministic instance") {
  auto [mdp, reward] = oracle::tiny_deterministic();
  SoftResult soft = soft_value_iteration(mdp, reward);

  ObservationLog log;
  log.vocabulary.names = {"w0", "w1", "w2"};
  log.element_names = {"e0"};
  log.trajectories = {{{{0, {0.8, 0.2}}},
                       {{1, {0.6, 0.4}}, {2, {0.3, 0.7}}},
                       {{2, {0.9, 0.1}}}}};
  DirichletObsModel model = DirichletObsModel::uniform(3, 2, 3, 1, 1.0);
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a) model.subject_alpha[model.subject_index(s, a) + s] = 6.0;
  model.confounder_alpha = {2, 2, 2};
  model.refresh_means();

  SamplerOptions opts;
  opts.samples = 6000;
  opts.burn_in = 600;
  opts.update_model = false;
  opts.sweep_mode = SweepMode::WholeTrajectory;
  opts.seed = 72;
  InferenceResult result = run_inference(log, model, mdp, soft.policy, opts);
  TrajectoryPosterior exact =
      enumerate_posterior(mdp, soft.policy, log.trajectories[0], model);
  CHECK(posterior_total_variation(result.posteriors[0], exact) <= 0.05);
}

TEST_CASE("identical emission rows make the label posterior collapse to eta") {
  auto [mdp, reward] = oracle::tiny_stochastic();
  SoftResult soft = soft_value_iteration(mdp, reward);
  ObservationLog log = tiny_log();
  // All sources share one emission law, so the likelihood cancels in Z.
  DirichletObsModel model = DirichletObsModel::uniform(2, 2, 3, 1, 1.0);
  TrajectoryPosterior exact =
      enumerate_posterior(mdp, soft.policy, log.trajectories[0], model);
  for (std::size_t t = 0; t < exact.z.size(); ++t)
    for (std::size_t n = 0; n < exact.z[t].size(); ++n)
      for (int z = 0; z < 2; ++z)
        CHECK(exact.z[t][n][z] ==
              doctest::Approx(log.trajectories[0][t][n].eta[z]).epsilon(1e-9));
}

TEST_CASE("confounder-only eta reverts the state marginals to the prior") {
  auto [mdp, reward] = oracle::tiny_stochastic();
  SoftResult soft = soft_value_iteration(mdp, reward);
  DirichletObsModel model = tiny_model();

  ObservationLog log = tiny_log();
  for (auto& step : log.trajectories[0])
    for (Observation& obs : step) obs.eta = {0.0, 1.0};
  TrajectoryPosterior with_obs =
      enumerate_posterior(mdp, soft.policy, log.trajectories[0], model);

  // Prior over (s,a): no observations at all.
  std::vector<std::vector<Observation>> empty(3);
  TrajectoryPosterior prior = enumerate_posterior(mdp, soft.policy, empty, model);
  for (int t = 0; t < 3; ++t)
    for (std::size_t i = 0; i < prior.joint[t].size(); ++i)
      CHECK(with_obs.joint[t][i] == doctest::Approx(prior.joint[t][i]).epsilon(1e-9));
}

TEST_CASE("monotone information: a sharp subject observation lifts the true cell") {
  auto [mdp, reward] = oracle::tiny_stochastic();
  SoftResult soft = soft_value_iteration(mdp, reward);
  DirichletObsModel model = tiny_model();
  // Make symbol w0 decisively indicate (s=0, a=0).
  model.subject_alpha[model.subject_index(0, 0) + 0] = 500.0;
  model.refresh_means();

  std::vector<std::vector<Observation>> obs(3);
  TrajectoryPosterior before = enumerate_posterior(mdp, soft.policy, obs, model);
  obs[1].push_back({0, {1.0, 0.0}});
  TrajectoryPosterior after = enumerate_posterior(mdp, soft.policy, obs, model);
  CHECK(after.joint[1][0] > before.joint[1][0]);
}

TEST_CASE("indirect observations: a learned mirror symbol fights occlusion") {
  auto [mdp, reward] = oracle::tiny_stochastic();
  SoftResult soft = soft_value_iteration(mdp, reward);

  // Symbol w2 is the mirror channel: seen only while the subject sits in
  // state 1, and baked into alpha during controlled fitting.
  DirichletObsModel with_mirror = DirichletObsModel::uniform(2, 2, 3, 1, 1.0);
  for (int a = 0; a < 2; ++a) {
    with_mirror.subject_alpha[with_mirror.subject_index(1, a) + 2] = 50.0;
  }
  with_mirror.refresh_means();
  DirichletObsModel without_mirror = DirichletObsModel::uniform(2, 2, 3, 1, 1.0);

  // Every direct observation vanished at t=1; only the mirror symbol remains.
  std::vector<std::vector<Observation>> obs(3);
  obs[1].push_back({2, {1.0, 0.0}});

  std::vector<std::vector<Observation>> empty(3);
  TrajectoryPosterior prior = enumerate_posterior(mdp, soft.policy, empty, without_mirror);
  TrajectoryPosterior informed = enumerate_posterior(mdp, soft.policy, obs, with_mirror);
  TrajectoryPosterior blind = enumerate_posterior(mdp, soft.policy, obs, without_mirror);

  auto mass_state1 = [&](const TrajectoryPosterior& p) {
    return p.joint[1][2] + p.joint[1][3];  // (s=1, a=0) and (s=1, a=1)
  };
  CHECK(mass_state1(informed) > mass_state1(prior) + 0.2);
  CHECK(std::abs(mass_state1(blind) - mass_state1(prior)) <= 1e-9);
}

TEST_CASE("accumulate_alpha_dot: point-mass posteriors reduce to counting") {
  auto [mdp, reward] = oracle::tiny_stochastic();
  ObservationLog log;
  log.vocabulary.names = {"w0", "w1", "w2"};
  log.element_names = {"e0"};
  log.trajectories = {{{{0, {1.0, 0.0}}, {1, {1.0, 0.0}}}, {{2, {0.0, 1.0}}}}};

  TrajectoryPosterior post;
  post.joint = {{1, 0, 0, 0}, {0, 0, 1, 0}};  // (s0,a0) then (s1,a0)
  post.pairwise = {{0, 0, 0, 0, 0, 0, 0, 0}};
  post.pairwise[0][1] = 1.0;  // (s0,a0) -> s1
  post.z = {{{1, 0}, {1, 0}}, {{0, 1}}};

  AlphaDot dot = accumulate_alpha_dot({post}, log, mdp);
  CHECK(dot.subject[0 * 3 + 0] == doctest::Approx(1.0));  // (s0,a0,w0)
  CHECK(dot.subject[0 * 3 + 1] == doctest::Approx(1.0));  // (s0,a0,w1)
  CHECK(dot.confounder[2] == doctest::Approx(1.0));       // (e0,w2)
  double total = 0.0;
  for (double v : dot.subject) total += v;
  for (double v : dot.confounder) total += v;
  CHECK(total == doctest::Approx(3.0));
}

TEST_CASE("accumulate_alpha_dot: uniform label posterior splits mass equally") {
  FiniteMdp mdp;
  mdp.num_states = 1;
  mdp.num_actions = 1;
  mdp.horizon = 1;
  mdp.start = {1.0};
  mdp.transition = {1.0};

  ObservationLog log;
  log.vocabulary.names = {"w0"};
  log.element_names = {"e0", "e1"};
  log.trajectories = {{{{0, {1.0 / 3, 1.0 / 3, 1.0 / 3}}}}};

  TrajectoryPosterior post;
  post.joint = {{1.0}};
  post.z = {{{1.0 / 3, 1.0 / 3, 1.0 / 3}}};
  AlphaDot dot = accumulate_alpha_dot({post}, log, mdp);
  CHECK(dot.subject[0] == doctest::Approx(1.0 / 3));
  CHECK(dot.confounder[0] == doctest::Approx(1.0 / 3));
  CHECK(dot.confounder[1] == doctest::Approx(1.0 / 3));
}

TEST_CASE("accumulate_alpha_dot: label mass conservation on a sampled run") {
  auto [mdp, reward] = oracle::tiny_stochastic();
  SoftResult soft = soft_value_iteration(mdp, reward);
  ObservationLog log = tiny_log();
  SamplerOptions opts;
  opts.samples = 500;
  opts.burn_in = 100;
  opts.seed = 9;
  InferenceResult result = run_inference(log, tiny_model(), mdp, soft.policy, opts);
  AlphaDot dot = accumulate_alpha_dot(result.posteriors, log, mdp);
  double total = 0.0;
  for (double v : dot.subject) total += v;
  for (double v : dot.confounder) total += v;
  CHECK(std::abs(total - log.total_observations()) <= 1e-6);
}

TEST_CASE("run_inference: identical seeds give bit-identical posteriors") {
  auto [mdp, reward] = oracle::tiny_stochastic();
  SoftResult soft = soft_value_iteration(mdp, reward);
  ObservationLog log = tiny_log();
  SamplerOptions opts;
  opts.samples = 400;
  opts.burn_in = 100;
  opts.seed = 1234;
  InferenceResult a = run_inference(log, tiny_model(), mdp, soft.policy, opts);
  InferenceResult b = run_inference(log, tiny_model(), mdp, soft.policy, opts);
  REQUIRE(a.posteriors.size() == b.posteriors.size());
  CHECK(a.posteriors[0].joint == b.posteriors[0].joint);
  CHECK(a.posteriors[0].pairwise == b.posteriors[0].pairwise);
  CHECK(a.posteriors[0].z == b.posteriors[0].z);
  CHECK(a.model.subject_alpha == b.model.subject_alpha);
}

TEST_CASE("posterior tables are normalized") {
  auto [mdp, reward] = oracle::tiny_stochastic();
  SoftResult soft = soft_value_iteration(mdp, reward);
  ObservationLog log = tiny_log();
  SamplerOptions opts;
  opts.samples = 500;
  opts.burn_in = 100;
  opts.seed = 10;
  InferenceResult result = run_inference(log, tiny_model(), mdp, soft.policy, opts);
  for (const auto& table : result.posteriors[0].joint) {
    double total = 0.0;
    for (double v : table) total += v;
    CHECK(std::abs(total - 1.0) <= 1e-6);
  }
  for (const auto& step : result.posteriors[0].z)
    for (const auto& row : step) {
      double total = 0.0;
      for (double v : row) total += v;
      CHECK(std::abs(total - 1.0) <= 1e-6);
    }
}

TEST_CASE("observation_feature_expectations: point-mass and uniform marginals") {
  auto [mdp, reward] = oracle::tiny_stochastic();

  TrajectoryPosterior point;
  point.joint = {{1, 0, 0, 0}, {0, 0, 0, 1}, {1, 0, 0, 0}};
  FeatureExpectations fe = observation_feature_expectations({point}, mdp, reward);
  // Mode trajectory (s0,a0), (s1,a1), (s0,a0): features (1,0), (1,1), (1,0).
  CHECK(fe.values[0] == doctest::Approx(3.0));
  CHECK(fe.values[1] == doctest::Approx(1.0));

  TrajectoryPosterior uniform;
  uniform.joint.assign(3, std::vector<double>(4, 0.25));
  FeatureExpectations ufe = observation_feature_expectations({uniform}, mdp, reward);
  // phi_k = T * (fraction of (s,a) cells firing k): feature 0 fires in 2 of 4.
  CHECK(ufe.values[0] == doctest::Approx(3.0 * 0.5));
  CHECK(ufe.values[1] == doctest::Approx(3.0 * 0.5));
}

TEST_CASE("observation_feature_expectations: agrees with the enumeration oracle") {
  auto [mdp, reward] = oracle::tiny_stochastic();
  SoftResult soft = soft_value_iteration(mdp, reward);
  ObservationLog log = tiny_log();
  DirichletObsModel model = tiny_model();
  TrajectoryPosterior exact =
      enumerate_posterior(mdp, soft.policy, log.trajectories[0], model);
  FeatureExpectations from_marginals =
      observation_feature_expectations({exact}, mdp, reward);

  SamplerOptions opts;
  opts.samples = 6000;
  opts.burn_in = 600;
  opts.update_model = false;
  opts.seed = 11;
  InferenceResult result = run_inference(log, model, mdp, soft.policy, opts);
  FeatureExpectations sampled =
      observation_feature_expectations(result.posteriors, mdp, reward);
  for (int k = 0; k < reward.num_features; ++k)
    CHECK(std::abs(sampled.values[k] - from_marginals.values[k]) <= 0.1);
}

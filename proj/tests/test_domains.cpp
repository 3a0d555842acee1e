#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "irlkit/gridworld.hpp"
#include "irlkit/onion.hpp"

using namespace irl;

TEST_CASE("gridworld: subject emission follows the exponential-distance law") {
  GridworldDomain d = build_gridworld(GridworldSpec{}, 3);
  const int W = 4;
  for (int s = 0; s < d.mdp.num_states; ++s) {
    double total = 0.0;
    for (int w = 0; w < W; ++w) total += std::exp(-grid_manhattan(s, w));
    double row_sum = 0.0;
    for (int w = 0; w < W; ++w) {
      double expected = std::exp(-grid_manhattan(s, w)) / total;
      CHECK(d.subject_emission[static_cast<std::size_t>(s) * W + w] ==
            doctest::Approx(expected).epsilon(1e-12));
      row_sum += d.subject_emission[static_cast<std::size_t>(s) * W + w];
    }
    CHECK(row_sum == doctest::Approx(1.0));
  }
}

TEST_CASE("gridworld: corner states emit their own symbol most often") {
  GridworldDomain d = build_gridworld(GridworldSpec{}, 3);
  for (int c = 0; c < 4; ++c) {
    int s = grid_corner_state(c);
    const double* row = &d.subject_emission[static_cast<std::size_t>(s) * 4];
    for (int w = 0; w < 4; ++w)
      if (w != c) CHECK(row[c] > row[w]);
  }
}

TEST_CASE("gridworld: the center cell emits uniformly") {
  GridworldDomain d = build_gridworld(GridworldSpec{}, 3);
  int center = 2 * kGridSide + 2;
  for (int w = 0; w < 4; ++w) {
    CHECK(grid_manhattan(center, w) == 4);
    CHECK(d.subject_emission[static_cast<std::size_t>(center) * 4 + w] ==
          doctest::Approx(0.25));
  }
}

TEST_CASE("gridworld: emission frequencies match the law within 3 standard errors") {
  GridworldDomain d = build_gridworld(GridworldSpec{}, 3);
  int s = 7;
  const double* row = &d.subject_emission[static_cast<std::size_t>(s) * 4];
  Rng rng(88);
  const int n = 10000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < n; ++i) ++counts[sample_categorical(rng, std::span(row, 4))];
  for (int w = 0; w < 4; ++w) {
    double se = std::sqrt(row[w] * (1 - row[w]) / n);
    CHECK(std::abs(counts[w] / static_cast<double>(n) - row[w]) <= 3 * se + 1e-9);
  }
}

TEST_CASE("gridworld: transition rows are stochastic and slip splits sideways") {
  GridworldSpec spec;
  spec.slip_probability = 0.1;
  GridworldDomain d = build_gridworld(spec, 3);
  d.mdp.validate();
  // Interior state moving north: 0.9 up, 0.05 east, 0.05 west.
  int s = 2 * kGridSide + 2;
  CHECK(d.mdp.trans(s, 0, s - kGridSide) == doctest::Approx(0.9));
  CHECK(d.mdp.trans(s, 0, s + 1) == doctest::Approx(0.05));
  CHECK(d.mdp.trans(s, 0, s - 1) == doctest::Approx(0.05));
}

TEST_CASE("gridworld demo: apportionment is fair across sources") {
  GridworldSpec spec;
  spec.obs_per_timestep = 40;

  SUBCASE("no elements: all observations from the subject") {
    spec.num_elements = 0;
    GridworldDomain d = build_gridworld(spec, 9);
    SimulatedDemo demo = simulate_gridworld_demo(d, EtaVariant::Uniform, 9);
    for (const auto& traj : demo.log.trajectories)
      for (const auto& step : traj) CHECK(step.size() == 40);
  }

  SUBCASE("three elements: ten observations per source") {
    spec.num_elements = 3;
    GridworldDomain d = build_gridworld(spec, 9);
    SimulatedDemo demo = simulate_gridworld_demo(d, EtaVariant::Plausible, 9);
    for (std::size_t i = 0; i < demo.true_sources.size(); ++i)
      for (const auto& step : demo.true_sources[i]) {
        std::vector<int> per_source(4, 0);
        for (int src : step) ++per_source[src];
        for (int src = 0; src < 4; ++src) CHECK(per_source[src] == 10);
      }
  }

  SUBCASE("uneven split: counts differ by at most one") {
    spec.num_elements = 2;  // 40 over 3 sources
    GridworldDomain d = build_gridworld(spec, 9);
    SimulatedDemo demo = simulate_gridworld_demo(d, EtaVariant::Uniform, 9);
    for (const auto& traj : demo.true_sources)
      for (const auto& step : traj) {
        std::vector<int> per_source(3, 0);
        for (int src : step) ++per_source[src];
        int lo = *std::min_element(per_source.begin(), per_source.end());
        int hi = *std::max_element(per_source.begin(), per_source.end());
        CHECK(hi - lo <= 1);
      }
  }
}

TEST_CASE("gridworld demo: plausible eta favors the true source about 80% of the time") {
  GridworldSpec spec;
  spec.num_elements = 3;
  GridworldDomain d = build_gridworld(spec, 43);
  SimulatedDemo demo = simulate_gridworld_demo(d, EtaVariant::Plausible, 43);
  demo.log.validate();
  long long favored = 0, total = 0;
  for (std::size_t i = 0; i < demo.log.trajectories.size(); ++i)
    for (std::size_t t = 0; t < demo.log.trajectories[i].size(); ++t)
      for (std::size_t n = 0; n < demo.log.trajectories[i][t].size(); ++n) {
        const Observation& obs = demo.log.trajectories[i][t][n];
        int true_src = demo.true_sources[i][t][n];
        CHECK(*std::max_element(obs.eta.begin(), obs.eta.end()) ==
              doctest::Approx(0.6));
        favored += obs.eta[true_src] == *std::max_element(obs.eta.begin(), obs.eta.end());
        ++total;
      }
  // 0.8 direct + 0.2 * (1/4 random pick) = 0.85 expected hit rate.
  double rate = static_cast<double>(favored) / total;
  CHECK(rate > 0.82);
  CHECK(rate < 0.88);
}

TEST_CASE("gridworld demo: seed-deterministic") {
  GridworldSpec spec;
  spec.num_elements = 2;
  GridworldDomain d = build_gridworld(spec, 12);
  SimulatedDemo a = simulate_gridworld_demo(d, EtaVariant::Plausible, 12);
  SimulatedDemo b = simulate_gridworld_demo(d, EtaVariant::Plausible, 12);
  REQUIRE(a.trajectories.size() == b.trajectories.size());
  for (std::size_t i = 0; i < a.trajectories.size(); ++i)
    CHECK(a.trajectories[i].steps == b.trajectories[i].steps);
  for (std::size_t i = 0; i < a.log.trajectories.size(); ++i)
    for (std::size_t t = 0; t < a.log.trajectories[i].size(); ++t)
      for (std::size_t n = 0; n < a.log.trajectories[i][t].size(); ++n) {
        CHECK(a.log.trajectories[i][t][n].omega == b.log.trajectories[i][t][n].omega);
        CHECK(a.log.trajectories[i][t][n].eta == b.log.trajectories[i][t][n].eta);
      }
}

TEST_CASE("onion MDP: action semantics") {
  OnionDomain d = build_onion_mdp(OnionSpec{});
  d.mdp.validate();

  int s = onion_state(kQualityUnknown, kOnConveyor, kGripperConveyor);
  CHECK(d.mdp.trans(s, kActGrip,
                    onion_state(kQualityUnknown, kGripped, kGripperConveyor)) ==
        doctest::Approx(1.0));

  // Inspect outside the inspection position has no effect.
  CHECK(d.mdp.trans(s, kActInspect, s) == doctest::Approx(1.0));

  // Inspect at the inspection position resolves the unknown quality.
  int si = onion_state(kQualityUnknown, kGripped, kGripperInspection);
  CHECK(d.mdp.trans(si, kActInspect,
                    onion_state(kQualityGood, kGripped, kGripperInspection)) ==
        doctest::Approx(0.5));
  CHECK(d.mdp.trans(si, kActInspect,
                    onion_state(kQualityBlemished, kGripped, kGripperInspection)) ==
        doctest::Approx(0.5));

  // Release while gripped terminates into the sink.
  int sg = onion_state(kQualityGood, kGripped, kGripperBin);
  CHECK(d.mdp.trans(sg, kActRelease, kOnionSink) == doctest::Approx(1.0));
  CHECK(d.mdp.is_terminal(sg, kActRelease));

  // Move actions relocate the gripper only.
  CHECK(d.mdp.trans(s, kActMoveBin,
                    onion_state(kQualityUnknown, kOnConveyor, kGripperBin)) ==
        doctest::Approx(1.0));

  // Every row except applicable Inspect is a point mass.
  for (int st = 0; st < d.mdp.num_states; ++st)
    for (int a = 0; a < d.mdp.num_actions; ++a) {
      if (a == kActInspect && st != kOnionSink && st / 9 == kQualityUnknown &&
          st % 3 == kGripperInspection)
        continue;
      double top = 0.0;
      for (int s2 = 0; s2 < d.mdp.num_states; ++s2)
        top = std::max(top, d.mdp.trans(st, a, s2));
      CHECK(top == doctest::Approx(1.0));
    }
}

TEST_CASE("onion MDP: the optimal policy inspects and sorts correctly") {
  OnionDomain d = build_onion_mdp(OnionSpec{});
  OnionDemo demo = simulate_onion_demo(d, EtaVariant::Oracle, 2, 2);
  REQUIRE(demo.trajectories.size() == 2);

  // Blemished episode: grip, move to inspection, inspect, move to bin, release.
  // A horizon longer than the sort needs inserts idle self-loop steps; drop them.
  const Trajectory& blemished = demo.trajectories[1];
  REQUIRE(demo.qualities[1] == kQualityBlemished);
  std::vector<int> actions;
  for (std::size_t t = 0; t < blemished.steps.size(); ++t) {
    auto [s, a] = blemished.steps[t];
    if (t + 1 < blemished.steps.size() && blemished.steps[t + 1].first == s) continue;
    actions.push_back(a);
  }
  CHECK(actions == std::vector<int>{kActGrip, kActMoveInspection, kActInspect,
                                    kActMoveBin, kActRelease});

  // Good episode ends with a release on the conveyor.
  const Trajectory& good = demo.trajectories[0];
  auto [last_s, last_a] = good.steps.back();
  CHECK(last_a == kActRelease);
  CHECK(last_s == onion_state(kQualityGood, kGripped, kGripperConveyor));
}

TEST_CASE("onion demo: controlled log decodes back to the true trajectories") {
  OnionDomain d = build_onion_mdp(OnionSpec{});
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    OnionDemo demo = simulate_onion_demo(d, EtaVariant::Plausible, seed, 4);
    std::vector<double> alpha = fit_alpha(demo.trajectories, demo.controlled,
                                          d.mdp.num_states, d.mdp.num_actions);
    DirichletObsModel model = DirichletObsModel::uniform(
        d.mdp.num_states, d.mdp.num_actions, d.vocab.size(), 0, 0.0);
    model.subject_alpha = alpha;
    model.refresh_means();
    std::vector<Trajectory> decoded = ml_trajectories(model, demo.controlled, d.mdp);
    REQUIRE(decoded.size() == demo.trajectories.size());
    // The camera only sees the gripper region and the onion's brightness, so
    // states sharing both (e.g. unknown-vs-good quality before the reveal in a
    // good episode) are indistinguishable by design. Decoding must land in the
    // right equivalence class at every step.
    auto signature = [&](int s, int quality) {
      int q = s / 9, g = s % 3;
      double bright = q == kQualityGood ? d.spec.good_bright
                      : q == kQualityBlemished
                          ? d.spec.blemished_bright_revealed
                          : (quality == kQualityGood ? d.spec.good_bright
                                                     : d.spec.blemished_bright_pre);
      return std::make_pair(d.region_of_gripper[g], bright);
    };
    // The gripper region is unmistakable; brightness rests on a handful of
    // Bernoulli draws per step, so allow rare level confusions.
    int steps = 0, bright_misses = 0;
    for (std::size_t i = 0; i < decoded.size(); ++i) {
      REQUIRE(decoded[i].steps.size() == demo.trajectories[i].steps.size());
      for (std::size_t t = 0; t < decoded[i].steps.size(); ++t) {
        auto got = signature(decoded[i].steps[t].first, demo.qualities[i]);
        auto want = signature(demo.trajectories[i].steps[t].first, demo.qualities[i]);
        CHECK(got.first == want.first);
        ++steps;
        bright_misses += got.second != want.second;
      }
    }
    CHECK(bright_misses <= steps / 10);
  }
}

TEST_CASE("onion demo: ML decoding of confounded logs breaks transition consistency") {
  OnionDomain d = build_onion_mdp(OnionSpec{});
  int majority_hits = 0, seeds = 0;
  for (std::uint64_t seed : {11ULL, 12ULL, 13ULL, 14ULL, 15ULL}) {
    OnionDemo demo = simulate_onion_demo(d, EtaVariant::Plausible, seed, 6);
    std::vector<double> alpha = fit_alpha(demo.trajectories, demo.controlled,
                                          d.mdp.num_states, d.mdp.num_actions);
    DirichletObsModel model = DirichletObsModel::uniform(
        d.mdp.num_states, d.mdp.num_actions, d.vocab.size(), 0, 0.0);
    model.subject_alpha = alpha;
    model.refresh_means();
    std::vector<Trajectory> decoded =
        ml_trajectories(model, demo.partially_controlled, d.mdp);
    int inconsistent = 0;
    for (const Trajectory& traj : decoded) {
      bool bad = false;
      for (std::size_t t = 0; t + 1 < traj.steps.size(); ++t) {
        auto [s, a] = traj.steps[t];
        if (d.mdp.trans(s, a, traj.steps[t + 1].first) <= 0.0) bad = true;
      }
      inconsistent += bad;
    }
    majority_hits += inconsistent * 2 > static_cast<int>(decoded.size());
    ++seeds;
  }
  CHECK(majority_hits * 2 > seeds);
}

TEST_CASE("ml_observations: point-mass eta edge cases") {
  ObservationLog log;
  log.vocabulary.names = {"w0"};
  log.element_names = {"e0"};
  log.trajectories = {{{{0, {1.0, 0.0}}, {0, {0.0, 1.0}}}}};
  ObservationLog out = ml_observations(log);
  REQUIRE(out.trajectories[0][0].size() == 1);
  CHECK(out.trajectories[0][0][0].eta == std::vector<double>{1.0});
}

TEST_CASE("ml_observations: purity and recall strictly between 0 and 1") {
  GridworldSpec spec;
  spec.num_elements = 3;
  GridworldDomain d = build_gridworld(spec, 47);
  SimulatedDemo demo = simulate_gridworld_demo(d, EtaVariant::Plausible, 47);
  ObservationLog kept = ml_observations(demo.log);

  long long kept_subject = 0, kept_total = 0, subject_total = 0;
  for (std::size_t i = 0; i < demo.log.trajectories.size(); ++i)
    for (std::size_t t = 0; t < demo.log.trajectories[i].size(); ++t) {
      kept_total += kept.trajectories[i][t].size();
      std::size_t k = 0;
      for (std::size_t n = 0; n < demo.log.trajectories[i][t].size(); ++n) {
        const Observation& obs = demo.log.trajectories[i][t][n];
        bool is_subject = demo.true_sources[i][t][n] == 0;
        subject_total += is_subject;
        bool retained =
            static_cast<int>(std::max_element(obs.eta.begin(), obs.eta.end()) -
                             obs.eta.begin()) == 0;
        if (retained) {
          kept_subject += is_subject;
          ++k;
        }
      }
      CHECK(k == kept.trajectories[i][t].size());
    }
  double purity = static_cast<double>(kept_subject) / kept_total;
  double recall = static_cast<double>(kept_subject) / subject_total;
  CHECK(purity > 0.0);
  CHECK(purity < 1.0);
  CHECK(recall > 0.0);
  CHECK(recall < 1.0);
}

TEST_CASE("onion demo: eta vectors are well-formed and the mirror fights occlusion") {
  OnionDomain d = build_onion_mdp(OnionSpec{});
  int occluded_steps = 0, occluded_with_onion_symbol = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    OnionDemo demo = simulate_onion_demo(d, EtaVariant::Plausible, seed, 4);
    demo.partially_controlled.validate();
    for (std::size_t i = 0; i < demo.occluded.size(); ++i)
      for (std::size_t t = 0; t < demo.occluded[i].size(); ++t) {
        if (!demo.occluded[i][t]) continue;
        ++occluded_steps;
        for (std::size_t n = 0; n < demo.true_sources[i][t].size(); ++n)
          if (demo.true_sources[i][t][n] == 0) {
            // Only the mirror can speak for the subject while occluded.
            CHECK(demo.partially_controlled.trajectories[i][t][n].omega >= kNumRegions);
            ++occluded_with_onion_symbol;
            break;
          }
      }
  }
  REQUIRE(occluded_steps > 30);
  double rate = static_cast<double>(occluded_with_onion_symbol) / occluded_steps;
  CHECK(rate > 0.3);
  CHECK(rate < 0.7);
}

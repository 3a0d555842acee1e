#include "irlkit/onion.hpp"

#include <algorithm>
#include <cmath>

namespace irl {

int onion_state(int quality, int position, int gripper) {
  return (quality * 3 + position) * 3 + gripper;
}

namespace {

void decode_state(int s, int& quality, int& position, int& gripper) {
  gripper = s % 3;
  position = (s / 3) % 3;
  quality = s / 9;
}

}  // namespace

std::vector<std::string> onion_element_names() {
  return {"blue_shirt_person", "foreground_person", "other_onions"};
}

OnionDomain build_onion_mdp(const OnionSpec& spec) {
  const int S = 28, A = 6, K = 4;
  OnionDomain d;
  d.spec = spec;
  d.mdp.num_states = S;
  d.mdp.num_actions = A;
  d.mdp.horizon = spec.horizon;
  d.mdp.sink_state = kOnionSink;
  d.mdp.transition.assign(static_cast<std::size_t>(S) * A * S, 0.0);
  d.mdp.terminal.assign(static_cast<std::size_t>(S) * A, 0);

  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      if (s == kOnionSink) {
        d.mdp.trans(s, a, s) = 1.0;
        continue;
      }
      int q, p, g;
      decode_state(s, q, p, g);
      switch (a) {
        case kActGrip:
          d.mdp.trans(s, a, p == kOnConveyor ? onion_state(q, kGripped, g) : s) = 1.0;
          break;
        case kActRelease:
          if (p == kGripped) {
            // Ends the sort; where the onion lands is captured by the features.
            d.mdp.trans(s, a, kOnionSink) = 1.0;
            d.mdp.terminal[static_cast<std::size_t>(s) * A + a] = 1;
          } else {
            d.mdp.trans(s, a, s) = 1.0;
          }
          break;
        case kActInspect:
          if (q == kQualityUnknown && g == kGripperInspection) {
            d.mdp.trans(s, a, onion_state(kQualityGood, p, g)) = 0.5;
            d.mdp.trans(s, a, onion_state(kQualityBlemished, p, g)) = 0.5;
          } else {
            d.mdp.trans(s, a, s) = 1.0;
          }
          break;
        case kActMoveConveyor:
          d.mdp.trans(s, a, onion_state(q, p, kGripperConveyor)) = 1.0;
          break;
        case kActMoveInspection:
          d.mdp.trans(s, a, onion_state(q, p, kGripperInspection)) = 1.0;
          break;
        case kActMoveBin:
          d.mdp.trans(s, a, onion_state(q, p, kGripperBin)) = 1.0;
          break;
      }
    }
  }
  d.mdp.start.assign(S, 0.0);
  d.mdp.start[onion_state(kQualityUnknown, kOnConveyor, kGripperConveyor)] = 1.0;

  d.reward.num_features = K;
  d.reward.features.assign(static_cast<std::size_t>(S) * A * K, 0);
  auto set_feature = [&](int q, int g, int k) {
    int s = onion_state(q, kGripped, g);
    d.reward.features[(static_cast<std::size_t>(s) * A + kActRelease) * K + k] = 1;
  };
  set_feature(kQualityGood, kGripperBin, 0);       // release good in bin
  set_feature(kQualityGood, kGripperConveyor, 1);  // release good on conveyor
  set_feature(kQualityBlemished, kGripperBin, 2);
  set_feature(kQualityBlemished, kGripperConveyor, 3);
  d.reward.weights = {-1.0, 1.0, 1.0, -1.0};

  d.vocab.names.clear();
  for (int r = 0; r < kNumRegions; ++r)
    d.vocab.names.push_back("region_" + std::to_string(r));
  d.vocab.names.push_back("bright_onion");
  d.vocab.names.push_back("dark_onion");
  return d;
}

namespace {

int sample_region(Rng& rng, int center, double center_mass) {
  double u = uniform01(rng);
  if (u < center_mass) return center;
  int side = u < center_mass + (1.0 - center_mass) / 2.0 ? -1 : 1;
  int r = center + side;
  return r < 0 || r >= kNumRegions ? center : r;
}

int sample_onion_symbol(Rng& rng, double bright_prob) {
  return uniform01(rng) < bright_prob ? kBrightOnion : kDarkOnion;
}

// eta rules of the sorting domain's sensing system.
struct OnionEtaRules {
  EtaVariant variant;
  Rng* rng;

  std::vector<double> gripper_eta(int true_source) const {
    if (variant == EtaVariant::Uniform) return {0.25, 0.25, 0.25, 0.25};
    if (variant == EtaVariant::Oracle) {
      std::vector<double> eta(4, 0.0);
      eta[true_source] = 1.0;
      return eta;
    }
    // Blob-size surrogate: subject and foreground blobs run large, the
    // background person's small; leftover mass goes to the blue shirt.
    double u = uniform01(*rng);
    double size = true_source == 1 ? 0.5 * u : 0.5 + 0.5 * u;
    return {size, 1.0 - size, 0.0, 0.0};
  }

  std::vector<double> onion_eta(int true_source, bool proximal) const {
    if (variant == EtaVariant::Uniform) return {0.25, 0.25, 0.25, 0.25};
    if (variant == EtaVariant::Oracle) {
      std::vector<double> eta(4, 0.0);
      eta[true_source] = 1.0;
      return eta;
    }
    if (proximal) return {0.8, 0.0, 0.1, 0.1};
    // No gripper blob nearby: 60% to other onions for small blobs or the
    // foreground person for large ones, normalized remainder split 10/25.
    bool large = true_source == 2;
    std::vector<double> eta = large ? std::vector<double>{0.10, 0.0, 0.60, 0.25}
                                    : std::vector<double>{0.10, 0.0, 0.25, 0.60};
    for (double& p : eta) p /= 0.95;
    return eta;
  }
};

}  // namespace

OnionDemo simulate_onion_demo(const OnionDomain& domain, EtaVariant variant,
                              std::uint64_t seed, int n_trajectories) {
  check(n_trajectories >= 1, "simulate_onion_demo: need at least one trajectory");
  const OnionSpec& spec = domain.spec;
  SolveResult expert = solve_optimal(domain.mdp, domain.reward);
  Rng rng(derive_seed(seed, 0x0e10));
  OnionEtaRules eta{variant, &rng};

  OnionDemo demo;
  auto init_log = [&](ObservationLog& log, bool with_elements) {
    log.vocabulary = domain.vocab;
    if (with_elements) log.element_names = onion_element_names();
    log.generator_config =
        "{\"domain\":\"onion\",\"mirror_enabled\":" +
        std::string(spec.mirror_enabled ? "true" : "false") +
        ",\"obs_per_timestep\":" + std::to_string(spec.obs_per_timestep) +
        ",\"gripper_region_mass\":" + std::to_string(spec.gripper_region_mass) +
        ",\"good_bright\":" + std::to_string(spec.good_bright) +
        ",\"blemished_bright_pre\":" + std::to_string(spec.blemished_bright_pre) +
        ",\"blemished_bright_revealed\":" +
        std::to_string(spec.blemished_bright_revealed) + "}";
  };
  init_log(demo.controlled, false);
  init_log(demo.partially_controlled, true);

  for (int i = 0; i < n_trajectories; ++i) {
    const int quality = i % 2 == 0 ? kQualityGood : kQualityBlemished;
    demo.qualities.push_back(quality);

    // Expert rollout with Inspect resolved to the episode's true quality.
    Trajectory truth;
    int s = onion_state(kQualityUnknown, kOnConveyor, kGripperConveyor);
    for (int t = 0; t < spec.horizon; ++t) {
      int a = expert.policy.action_at(t, s);
      truth.steps.emplace_back(s, a);
      if (domain.mdp.is_terminal(s, a)) break;
      int q, p, g;
      decode_state(s, q, p, g);
      if (a == kActInspect && q == kQualityUnknown && g == kGripperInspection)
        s = onion_state(quality, p, g);
      else {
        int next = 0;
        for (int s2 = 0; s2 < domain.mdp.num_states; ++s2)
          if (domain.mdp.trans(s, a, s2) > 0.5) next = s2;
        s = next;
      }
    }
    const int T = static_cast<int>(truth.steps.size());

    // Occlusion window for the partially controlled run.
    std::vector<bool> occluded(T, false);
    if (uniform01(rng) < spec.occlusion_probability && T > 2) {
      int len = uniform01(rng) < 0.5 ? 1 : 2;
      int start = 1 + uniform_int(rng, T - len - 1);
      for (int t = start; t < start + len; ++t) occluded[t] = true;
    }

    std::vector<std::vector<Observation>> ctrl(T), partial(T);
    std::vector<std::vector<int>> sources(T);
    int blue_region = uniform_int(rng, kNumRegions);
    for (int t = 0; t < T; ++t) {
      int q, p, g;
      decode_state(truth.steps[t].first, q, p, g);
      int subject_region = domain.region_of_gripper[g];
      double bright = q == kQualityGood ? spec.good_bright
                      : q == kQualityBlemished
                          ? spec.blemished_bright_revealed
                          : (quality == kQualityGood ? spec.good_bright
                                                     : spec.blemished_bright_pre);

      // Subject: half gripper blobs, half onion blobs.
      std::vector<int> direct;
      for (int n = 0; n < spec.obs_per_timestep; ++n)
        direct.push_back(n % 2 == 0
                             ? sample_region(rng, subject_region, spec.gripper_region_mass)
                             : sample_onion_symbol(rng, bright));
      bool mirror_fires =
          spec.mirror_enabled && uniform01(rng) < spec.mirror_emit_probability;
      int mirror_symbol = mirror_fires ? sample_onion_symbol(rng, bright) : -1;

      for (int w : direct) ctrl[t].push_back({w, {1.0}});
      if (mirror_fires) ctrl[t].push_back({mirror_symbol, {1.0}});

      if (!occluded[t]) {
        for (int w : direct) {
          bool is_gripper = w < kNumRegions;
          partial[t].push_back(
              {w, is_gripper ? eta.gripper_eta(0) : eta.onion_eta(0, true)});
          sources[t].push_back(0);
        }
      }
      if (mirror_fires) {
        partial[t].push_back({mirror_symbol, eta.onion_eta(0, false)});
        sources[t].push_back(0);
      }

      // Blue-shirt person: gripper blobs along a region random walk.
      for (int n = 0; n < 4; ++n) {
        partial[t].push_back(
            {sample_region(rng, blue_region, 0.8), eta.gripper_eta(1)});
        sources[t].push_back(1);
      }
      blue_region = std::clamp(blue_region + (uniform01(rng) < 0.5 ? -1 : 1), 0,
                               kNumRegions - 1);

      // Foreground person: active while occluding, both symbol kinds.
      if (occluded[t]) {
        for (int n = 0; n < 2; ++n) {
          partial[t].push_back({uniform_int(rng, kNumRegions), eta.gripper_eta(2)});
          sources[t].push_back(2);
        }
        for (int n = 0; n < 2; ++n) {
          partial[t].push_back({sample_onion_symbol(rng, 0.5), eta.onion_eta(2, false)});
          sources[t].push_back(2);
        }
      }

      // Other onions on the conveyor, mostly bright.
      for (int n = 0; n < 4; ++n) {
        partial[t].push_back({sample_onion_symbol(rng, 0.7), eta.onion_eta(3, false)});
        sources[t].push_back(3);
      }
    }

    demo.trajectories.push_back(std::move(truth));
    demo.controlled.trajectories.push_back(std::move(ctrl));
    demo.partially_controlled.trajectories.push_back(std::move(partial));
    demo.true_sources.push_back(std::move(sources));
    demo.occluded.push_back(std::move(occluded));
  }
  return demo;
}

}  // namespace irl

#include "irlkit/gridworld.hpp"

#include <algorithm>
#include <cmath>

namespace irl {

EtaVariant eta_variant_from_string(const std::string& name) {
  if (name == "uniform") return EtaVariant::Uniform;
  if (name == "plausible") return EtaVariant::Plausible;
  if (name == "oracle") return EtaVariant::Oracle;
  throw InvalidInput("unknown eta variant: " + name);
}

int grid_corner_state(int corner) {
  check(corner >= 0 && corner < 4, "grid_corner_state: corner out of range");
  int r = (corner / 2) * (kGridSide - 1);
  int c = (corner % 2) * (kGridSide - 1);
  return r * kGridSide + c;
}

int grid_manhattan(int state, int corner) {
  int r = state / kGridSide, c = state % kGridSide;
  int cs = grid_corner_state(corner);
  return std::abs(r - cs / kGridSide) + std::abs(c - cs % kGridSide);
}

namespace {

constexpr int kMoves[4][2] = {{-1, 0}, {1, 0}, {0, 1}, {0, -1}};  // N S E W

int move_target(int s, int dir) {
  int r = s / kGridSide + kMoves[dir][0];
  int c = s % kGridSide + kMoves[dir][1];
  if (r < 0 || r >= kGridSide || c < 0 || c >= kGridSide) return s;  // wall
  return r * kGridSide + c;
}

}  // namespace

GridworldDomain build_gridworld(const GridworldSpec& spec, std::uint64_t seed) {
  check(spec.goal_corner >= 0 && spec.goal_corner < 4, "GridworldSpec: bad goal corner");
  check(spec.slip_probability >= 0.0 && spec.slip_probability < 1.0,
        "GridworldSpec: bad slip probability");
  const int S = kGridSide * kGridSide, A = 4, K = 4, W = 4;

  GridworldDomain d;
  d.spec = spec;
  d.mdp.num_states = S;
  d.mdp.num_actions = A;
  d.mdp.horizon = spec.horizon;
  d.mdp.transition.assign(static_cast<std::size_t>(S) * A * S, 0.0);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      // Slip mass split between the two perpendicular moves.
      int perp0 = a < 2 ? 2 : 0, perp1 = a < 2 ? 3 : 1;
      d.mdp.trans(s, a, move_target(s, a)) += 1.0 - spec.slip_probability;
      d.mdp.trans(s, a, move_target(s, perp0)) += spec.slip_probability / 2.0;
      d.mdp.trans(s, a, move_target(s, perp1)) += spec.slip_probability / 2.0;
    }
  d.mdp.start.assign(S, 0.0);
  // Start at the center: the only state equidistant from every corner, so the
  // start itself carries no reward feature.
  d.mdp.start[(kGridSide / 2) * kGridSide + kGridSide / 2] = 1.0;

  d.reward.num_features = K;
  d.reward.features.assign(static_cast<std::size_t>(S) * A * K, 0);
  for (int k = 0; k < K; ++k) {
    int cs = grid_corner_state(k);
    for (int a = 0; a < A; ++a)
      d.reward.features[(static_cast<std::size_t>(cs) * A + a) * K + k] = 1;
  }
  d.reward.weights.assign(K, 0.0);
  d.reward.weights[spec.goal_corner] = 1.0;

  d.vocab.names = {"corner_0", "corner_1", "corner_2", "corner_3"};
  d.subject_emission.assign(static_cast<std::size_t>(S) * W, 0.0);
  for (int s = 0; s < S; ++s) {
    double total = 0.0;
    for (int w = 0; w < W; ++w) {
      double p = std::exp(-static_cast<double>(grid_manhattan(s, w)));
      d.subject_emission[static_cast<std::size_t>(s) * W + w] = p;
      total += p;
    }
    for (int w = 0; w < W; ++w) d.subject_emission[static_cast<std::size_t>(s) * W + w] /= total;
  }

  // One random emission law per element, a symmetric Dirichlet(1) draw.
  Rng rng(derive_seed(seed, 0xe1e));
  d.element_emission.assign(static_cast<std::size_t>(spec.num_elements) * W, 0.0);
  std::exponential_distribution<double> expo(1.0);
  for (int e = 0; e < spec.num_elements; ++e) {
    double total = 0.0;
    for (int w = 0; w < W; ++w) {
      double g = expo(rng);
      d.element_emission[static_cast<std::size_t>(e) * W + w] = g;
      total += g;
    }
    for (int w = 0; w < W; ++w)
      d.element_emission[static_cast<std::size_t>(e) * W + w] /= total;
  }
  return d;
}

DirichletObsModel GridworldDomain::true_model() const {
  const int S = mdp.num_states, A = mdp.num_actions, W = vocab.size();
  DirichletObsModel m = DirichletObsModel::uniform(S, A, W, spec.num_elements, 0.0);
  constexpr double kSharp = 1e9;  // makes the floor negligible in the means
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a)
      for (int w = 0; w < W; ++w)
        m.subject_alpha[m.subject_index(s, a) + w] =
            kSharp * subject_emission[static_cast<std::size_t>(s) * W + w];
  for (int e = 0; e < spec.num_elements; ++e)
    for (int w = 0; w < W; ++w)
      m.confounder_alpha[static_cast<std::size_t>(e) * W + w] =
          kSharp * element_emission[static_cast<std::size_t>(e) * W + w];
  m.refresh_means();
  return m;
}

namespace {

std::vector<double> make_eta(EtaVariant variant, int true_source, int sources, Rng& rng) {
  std::vector<double> eta(sources, 0.0);
  if (sources == 1) {
    eta[0] = 1.0;
    return eta;
  }
  switch (variant) {
    case EtaVariant::Uniform:
      std::fill(eta.begin(), eta.end(), 1.0 / sources);
      break;
    case EtaVariant::Oracle:
      eta[true_source] = 1.0;
      break;
    case EtaVariant::Plausible: {
      int favored = uniform01(rng) < 0.8 ? true_source : uniform_int(rng, sources);
      std::fill(eta.begin(), eta.end(), 0.4 / (sources - 1));
      eta[favored] = 0.6;
      break;
    }
  }
  return eta;
}

}  // namespace

SimulatedDemo simulate_gridworld_demo(const GridworldDomain& domain, EtaVariant variant,
                                      std::uint64_t seed) {
  const GridworldSpec& spec = domain.spec;
  const int W = domain.vocab.size();
  const int sources = 1 + spec.num_elements;

  SolveResult expert = solve_optimal(domain.mdp, domain.reward);
  Rng rng(derive_seed(seed, 0x5151));

  SimulatedDemo demo;
  demo.log.vocabulary = domain.vocab;
  for (int e = 0; e < spec.num_elements; ++e)
    demo.log.element_names.push_back("element_" + std::to_string(e));
  demo.log.generator_config =
      "{\"domain\":\"gridworld\",\"goal_corner\":" + std::to_string(spec.goal_corner) +
      ",\"slip\":" + std::to_string(spec.slip_probability) +
      ",\"num_elements\":" + std::to_string(spec.num_elements) + "}";

  // Fair apportionment of the per-timestep budget across sources.
  std::vector<int> quota(sources, spec.obs_per_timestep / sources);
  for (int i = 0; i < spec.obs_per_timestep % sources; ++i) ++quota[i];

  for (int traj = 0; traj < spec.num_trajectories; ++traj) {
    Trajectory truth = rollout(domain.mdp, expert.policy, rng);
    std::vector<std::vector<Observation>> obs_traj(truth.steps.size());
    std::vector<std::vector<int>> src_traj(truth.steps.size());
    for (std::size_t t = 0; t < truth.steps.size(); ++t) {
      int s = truth.steps[t].first;
      for (int src = 0; src < sources; ++src) {
        const double* law =
            src == 0 ? &domain.subject_emission[static_cast<std::size_t>(s) * W]
                     : &domain.element_emission[static_cast<std::size_t>(src - 1) * W];
        for (int n = 0; n < quota[src]; ++n) {
          Observation obs;
          obs.omega = sample_categorical(rng, std::span<const double>(law, W));
          obs.eta = make_eta(variant, src, sources, rng);
          obs_traj[t].push_back(std::move(obs));
          src_traj[t].push_back(src);
        }
      }
    }
    demo.trajectories.push_back(std::move(truth));
    demo.log.trajectories.push_back(std::move(obs_traj));
    demo.true_sources.push_back(std::move(src_traj));
  }
  return demo;
}

SimulatedDemo simulate_gridworld_calibration(const GridworldDomain& domain,
                                             int n_trajectories, std::uint64_t seed) {
  check(n_trajectories >= 1, "simulate_gridworld_calibration: need trajectories");
  const int S = domain.mdp.num_states, A = domain.mdp.num_actions;
  const int W = domain.vocab.size();
  Rng rng(derive_seed(seed, 0xca1));

  Policy walk;
  walk.kind = Policy::Kind::Stochastic;
  walk.prob = {std::vector<double>(static_cast<std::size_t>(S) * A, 1.0 / A)};

  SimulatedDemo demo;
  demo.log.vocabulary = domain.vocab;
  demo.log.generator_config = "{\"domain\":\"gridworld\",\"mode\":\"calibration\"}";
  for (int i = 0; i < n_trajectories; ++i) {
    Trajectory truth = rollout(domain.mdp, walk, rng);
    std::vector<std::vector<Observation>> obs_traj(truth.steps.size());
    std::vector<std::vector<int>> src_traj(truth.steps.size());
    for (std::size_t t = 0; t < truth.steps.size(); ++t) {
      const double* law =
          &domain.subject_emission[static_cast<std::size_t>(truth.steps[t].first) * W];
      for (int n = 0; n < domain.spec.obs_per_timestep; ++n) {
        obs_traj[t].push_back(
            {sample_categorical(rng, std::span<const double>(law, W)), {1.0}});
        src_traj[t].push_back(0);
      }
    }
    demo.trajectories.push_back(std::move(truth));
    demo.log.trajectories.push_back(std::move(obs_traj));
    demo.true_sources.push_back(std::move(src_traj));
  }
  return demo;
}

std::vector<Trajectory> ml_trajectories(const DirichletObsModel& obs_model,
                                        const ObservationLog& log, const FiniteMdp& mdp) {
  const int A = mdp.num_actions;
  std::vector<Trajectory> out;
  for (const auto& traj : log.trajectories) {
    Trajectory decoded;
    for (const auto& step : traj) {
      int best_s = 0, best_a = 0;
      double best = kNegInf;
      for (int s = 0; s < mdp.num_states; ++s)
        for (int a = 0; a < A; ++a) {
          double score = 0.0;
          for (const Observation& obs : step)
            score += obs.eta[0] * obs_model.subject_logp(s, a, obs.omega);
          if (score > best) {
            best = score;
            best_s = s;
            best_a = a;
          }
        }
      decoded.steps.emplace_back(best_s, best_a);
    }
    out.push_back(std::move(decoded));
  }
  return out;
}

ObservationLog ml_observations(const ObservationLog& log) {
  ObservationLog out;
  out.vocabulary = log.vocabulary;
  out.generator_config = log.generator_config;
  for (const auto& traj : log.trajectories) {
    std::vector<std::vector<Observation>> kept_traj;
    for (const auto& step : traj) {
      std::vector<Observation> kept;
      for (const Observation& obs : step) {
        int amax = static_cast<int>(
            std::max_element(obs.eta.begin(), obs.eta.end()) - obs.eta.begin());
        if (amax == 0) kept.push_back({obs.omega, {1.0}});
      }
      kept_traj.push_back(std::move(kept));
    }
    out.trajectories.push_back(std::move(kept_traj));
  }
  return out;
}

}  // namespace irl

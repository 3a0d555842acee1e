#include "irlkit/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace irl {

using nlohmann::json;

namespace {

const std::vector<std::string> kGridworldVariants = {
    "true_trajectories", "true_obs_fn",     "plausible_eta",  "uniform_eta",
    "ignore_ce",         "ml_trajectories", "ml_observations"};
const std::vector<std::string> kOnionVariants = {
    "true_trajectories", "plausible_eta",   "uniform_eta",
    "ignore_ce",         "ml_trajectories", "ml_observations"};

bool contains(const std::vector<std::string>& xs, const std::string& x) {
  return std::find(xs.begin(), xs.end(), x) != xs.end();
}

// Stable string hash for seed derivation (FNV-1a), so run seeds don't depend
// on the standard library's std::hash.
std::uint64_t stable_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

std::uint64_t run_seed(const ExperimentConfig& config, const std::string& variant,
                       int sweep_value, int run_index) {
  return derive_seed(derive_seed(config.master_seed, stable_hash(variant)),
                     static_cast<std::uint64_t>(sweep_value),
                     static_cast<std::uint64_t>(run_index));
}

ObservationLog strip_eta(const ObservationLog& log) {
  ObservationLog out;
  out.vocabulary = log.vocabulary;
  out.generator_config = log.generator_config;
  out.trajectories = log.trajectories;
  for (auto& traj : out.trajectories)
    for (auto& step : traj)
      for (Observation& obs : step) obs.eta = {1.0};
  return out;
}

DirichletObsModel make_prior(int S, int A, int W, int num_elements,
                             std::vector<double> subject_alpha) {
  DirichletObsModel model = DirichletObsModel::uniform(S, A, W, num_elements, 1.0);
  model.subject_alpha = std::move(subject_alpha);
  model.refresh_means();
  return model;
}

std::vector<double> fit_from_trajectories(const FiniteMdp& mdp,
                                          const RewardModel& features,
                                          const std::vector<Trajectory>& demos,
                                          const FitOptions& opts) {
  return fit_weights(mdp, features, empirical_feature_expectations(demos, mdp, features),
                     opts)
      .weights;
}

EtaVariant variant_eta(const std::string& variant) {
  // true_obs_fn is evaluated with uninformative eta by design; the eta-swept
  // variants pick their own; everything else sees the plausible sensing system.
  if (variant == "uniform_eta" || variant == "true_obs_fn") return EtaVariant::Uniform;
  return EtaVariant::Plausible;
}

struct LearnOutcome {
  std::vector<double> weights;
  int em_iterations = 0;
};

LearnOutcome learn_gridworld(const ExperimentConfig& config, const std::string& variant,
                             const GridworldDomain& domain, const SimulatedDemo& demo,
                             std::uint64_t seed) {
  const FiniteMdp& mdp = domain.mdp;
  const RewardModel& features = domain.reward;
  const int S = mdp.num_states, A = mdp.num_actions, W = domain.vocab.size();

  if (variant == "true_trajectories")
    return {fit_from_trajectories(mdp, features, demo.trajectories, config.em.fit), 0};

  EmOptions em = config.em;
  em.seed = derive_seed(seed, 3);

  if (variant == "true_obs_fn") {
    EmOptions fixed = em;
    fixed.sampler.update_model = false;
    EmResult result = run_em(demo.log, domain.true_model(), mdp, features, fixed);
    return {result.weights, result.iterations};
  }

  // All remaining learners calibrate the subject's emission model on a
  // controlled exploratory run, then carry it over at reduced pseudo-count mass.
  SimulatedDemo calibration = simulate_gridworld_calibration(
      domain, 2 * domain.spec.num_trajectories, derive_seed(seed, 2));
  std::vector<double> subject_alpha =
      fit_alpha(calibration.trajectories, calibration.log, S, A);

  if (variant == "ml_trajectories") {
    DirichletObsModel model = make_prior(S, A, W, 0, subject_alpha);
    return {fit_from_trajectories(mdp, features, ml_trajectories(model, demo.log, mdp),
                                  config.em.fit),
            0};
  }

  std::vector<double> transferred =
      scale_alpha(subject_alpha, config.alpha_transfer_scale);
  ObservationLog log;
  int num_elements = 0;
  if (variant == "ignore_ce") {
    log = strip_eta(demo.log);
  } else if (variant == "ml_observations") {
    log = ml_observations(demo.log);
  } else if (variant == "plausible_eta" || variant == "uniform_eta") {
    log = demo.log;
    num_elements = domain.spec.num_elements;
  } else {
    throw InvalidInput("unknown gridworld variant: " + variant);
  }
  DirichletObsModel prior = make_prior(S, A, W, num_elements, std::move(transferred));
  EmResult result = run_em(log, prior, mdp, features, em);
  return {result.weights, result.iterations};
}

LearnOutcome learn_onion(const ExperimentConfig& config, const std::string& variant,
                         const OnionDomain& domain, const OnionDemo& demo,
                         std::uint64_t seed) {
  const FiniteMdp& mdp = domain.mdp;
  const RewardModel& features = domain.reward;
  const int S = mdp.num_states, A = mdp.num_actions, W = domain.vocab.size();

  if (variant == "true_trajectories")
    return {fit_from_trajectories(mdp, features, demo.trajectories, config.em.fit), 0};

  std::vector<double> subject_alpha =
      fit_alpha(demo.trajectories, demo.controlled, S, A);
  const bool controlled = config.controlled_env;
  const ObservationLog& source = controlled ? demo.controlled : demo.partially_controlled;

  EmOptions em = config.em;
  em.seed = derive_seed(seed, 3);

  if (variant == "ml_trajectories") {
    DirichletObsModel model = make_prior(S, A, W, 0, subject_alpha);
    return {fit_from_trajectories(mdp, features, ml_trajectories(model, source, mdp),
                                  config.em.fit),
            0};
  }

  std::vector<double> prior_alpha =
      controlled ? subject_alpha : scale_alpha(subject_alpha, config.alpha_transfer_scale);
  ObservationLog log;
  int num_elements = 0;
  if (variant == "ignore_ce") {
    log = strip_eta(source);
  } else if (variant == "ml_observations") {
    log = ml_observations(source);
  } else if (variant == "plausible_eta" || variant == "uniform_eta") {
    log = source;
    num_elements = static_cast<int>(source.element_names.size());
  } else {
    throw InvalidInput("unknown onion variant: " + variant);
  }
  DirichletObsModel prior = make_prior(S, A, W, num_elements, std::move(prior_alpha));
  if (controlled) em.sampler.update_model = false;  // calibrated in this environment
  EmResult result = run_em(log, prior, mdp, features, em);
  return {result.weights, result.iterations};
}

}  // namespace

void ExperimentConfig::validate() const {
  check(domain == "gridworld" || domain == "onion",
        "ExperimentConfig: domain must be gridworld or onion");
  check(!variants.empty(), "ExperimentConfig: no variants");
  const auto& valid = domain == "gridworld" ? kGridworldVariants : kOnionVariants;
  for (const std::string& v : variants)
    check(contains(valid, v), "ExperimentConfig: variant " + v + " invalid for " + domain);
  check(!sweep.empty(), "ExperimentConfig: empty sweep");
  for (int v : sweep)
    check(domain == "gridworld" ? v >= 0 : v >= 1,
          "ExperimentConfig: sweep value out of range");
  check(runs_per_point >= 1, "ExperimentConfig: runs_per_point must be >= 1");
  check(alpha_transfer_scale > 0.0, "ExperimentConfig: alpha_transfer_scale must be > 0");
}

ResultRow run_single(const ExperimentConfig& config, const std::string& variant,
                     int sweep_value, int run_index) {
  const auto start_time = std::chrono::steady_clock::now();
  const std::uint64_t seed = run_seed(config, variant, sweep_value, run_index);

  ResultRow row;
  row.domain = config.domain;
  row.variant = variant;
  row.sweep_value = sweep_value;
  row.seed = seed;

  try {
    LearnOutcome outcome;
    if (config.domain == "gridworld") {
      GridworldSpec spec = config.gridworld;
      spec.num_elements = sweep_value;
      GridworldDomain domain = build_gridworld(spec, seed);
      SimulatedDemo demo =
          simulate_gridworld_demo(domain, variant_eta(variant), derive_seed(seed, 1));
      outcome = learn_gridworld(config, variant, domain, demo, seed);
      SolveResult expert = solve_optimal(domain.mdp, domain.reward);
      SolveResult learned =
          solve_optimal(domain.mdp, domain.reward.with_weights(outcome.weights));
      row.ile = ile(domain.mdp, domain.reward, expert.policy, learned.policy);
    } else {
      OnionDomain domain = build_onion_mdp(config.onion);
      OnionDemo demo = simulate_onion_demo(domain, variant_eta(variant),
                                           derive_seed(seed, 1), sweep_value);
      outcome = learn_onion(config, variant, domain, demo, seed);
      SolveResult expert = solve_optimal(domain.mdp, domain.reward);
      SolveResult learned =
          solve_optimal(domain.mdp, domain.reward.with_weights(outcome.weights));
      row.ile = ile(domain.mdp, domain.reward, expert.policy, learned.policy);
    }
    row.em_iterations = outcome.em_iterations;
  } catch (const std::exception& e) {
    throw InvalidInput("run " + variant + "/" + std::to_string(sweep_value) + "/" +
                       std::to_string(run_index) + ": " + e.what());
  }

  row.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return row;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config, int jobs) {
  config.validate();
  check(jobs >= 1, "run_experiment: jobs must be >= 1");

  struct Cell {
    std::string variant;
    int sweep_value;
    int run_index;
  };
  std::vector<Cell> cells;
  for (const std::string& variant : config.variants)
    for (int sweep_value : config.sweep)
      for (int r = 0; r < config.runs_per_point; ++r)
        cells.push_back({variant, sweep_value, r});

  std::vector<ResultRow> rows(cells.size());
  if (jobs == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      rows[i] = run_single(config, cells[i].variant, cells[i].sweep_value,
                           cells[i].run_index);
    return rows;
  }

  std::mutex mutex;
  std::size_t next = 0;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mutex);
        if (failure || next >= cells.size()) return;
        i = next++;
      }
      try {
        ResultRow row = run_single(config, cells[i].variant, cells[i].sweep_value,
                                   cells[i].run_index);
        std::lock_guard<std::mutex> lock(mutex);
        rows[i] = std::move(row);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < std::min<int>(jobs, static_cast<int>(cells.size())); ++j)
    pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::vector<SummaryRow> aggregate(const std::vector<ResultRow>& rows) {
  check(!rows.empty(), "aggregate: no rows");
  std::vector<SummaryRow> out;
  auto find = [&](const std::string& variant, int sweep_value) -> SummaryRow& {
    for (SummaryRow& s : out)
      if (s.variant == variant && s.sweep_value == sweep_value) return s;
    out.push_back({variant, sweep_value, 0, 0.0, 0.0, 0.0, false});
    return out.back();
  };
  for (const ResultRow& row : rows) {
    SummaryRow& s = find(row.variant, row.sweep_value);
    ++s.n;
    s.mean_ile += row.ile;
  }
  for (SummaryRow& s : out) s.mean_ile /= s.n;
  for (SummaryRow& s : out) {
    if (s.n < 2) continue;
    double ss = 0.0;
    for (const ResultRow& row : rows)
      if (row.variant == s.variant && row.sweep_value == s.sweep_value)
        ss += (row.ile - s.mean_ile) * (row.ile - s.mean_ile);
    double half = 1.96 * std::sqrt(ss / (s.n - 1)) / std::sqrt(static_cast<double>(s.n));
    s.ci_low = s.mean_ile - half;
    s.ci_high = s.mean_ile + half;
    s.has_ci = true;
  }
  return out;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write to " + path);
  out << std::setprecision(17);
  return out;
}

}  // namespace

void write_result_rows(const std::vector<ResultRow>& rows, const std::string& path,
                       bool include_wall_time) {
  std::ofstream out = open_out(path);
  out << "domain,variant,sweep_value,seed,ile,em_iterations";
  if (include_wall_time) out << ",wall_time";
  out << '\n';
  for (const ResultRow& row : rows) {
    out << row.domain << ',' << row.variant << ',' << row.sweep_value << ',' << row.seed
        << ',' << row.ile << ',' << row.em_iterations;
    if (include_wall_time) out << ',' << row.wall_time;
    out << '\n';
  }
}

void emit_plot_data(const std::vector<SummaryRow>& summary, const std::string& path) {
  check(!summary.empty(), "emit_plot_data: empty summary");
  std::ofstream out = open_out(path);
  out << "sweep_value,variant,n,mean,ci_low,ci_high\n";
  for (const SummaryRow& s : summary)
    out << s.sweep_value << ',' << s.variant << ',' << s.n << ',' << s.mean_ile << ','
        << s.ci_low << ',' << s.ci_high << '\n';
}

void write_summary(const std::vector<SummaryRow>& summary, const std::string& path) {
  emit_plot_data(summary, path);
}

std::vector<SummaryRow> read_summary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read " + path);
  std::string line;
  check(static_cast<bool>(std::getline(in, line)) &&
            line == "sweep_value,variant,n,mean,ci_low,ci_high",
        "read_summary: bad header in " + path);
  std::vector<SummaryRow> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    SummaryRow s;
    std::getline(ss, field, ',');
    s.sweep_value = std::stoi(field);
    std::getline(ss, s.variant, ',');
    std::getline(ss, field, ',');
    s.n = std::stoi(field);
    std::getline(ss, field, ',');
    s.mean_ile = std::stod(field);
    std::getline(ss, field, ',');
    s.ci_low = std::stod(field);
    std::getline(ss, field, ',');
    s.ci_high = std::stod(field);
    s.has_ci = s.n > 1;
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

void parse_fit(const json& j, FitOptions& fit) {
  fit.tolerance = j.value("tolerance", fit.tolerance);
  fit.max_iters = j.value("max_iters", fit.max_iters);
  fit.step = j.value("step", fit.step);
  fit.l2_reg = j.value("l2_reg", fit.l2_reg);
  fit.l1_reg = j.value("l1_reg", fit.l1_reg);
}

void parse_sampler(const json& j, SamplerOptions& s) {
  s.samples = j.value("samples", s.samples);
  s.burn_in = j.value("burn_in", s.burn_in);
  s.reburn = j.value("reburn", s.reburn);
  s.thinning = j.value("thinning", s.thinning);
  s.max_outer_iters = j.value("max_outer_iters", s.max_outer_iters);
  s.o_tolerance = j.value("o_tolerance", s.o_tolerance);
  s.blend_c = j.value("blend_c", s.blend_c);
  s.warm_start = j.value("warm_start", s.warm_start);
  std::string mode = j.value("sweep_mode", "auto");
  if (mode == "auto")
    s.sweep_mode = SweepMode::Auto;
  else if (mode == "per_node")
    s.sweep_mode = SweepMode::PerNode;
  else if (mode == "whole_trajectory")
    s.sweep_mode = SweepMode::WholeTrajectory;
  else
    throw InvalidInput("unknown sweep_mode: " + mode);
}

void parse_em(const json& j, EmOptions& em) {
  em.restarts = j.value("restarts", em.restarts);
  em.max_em_iters = j.value("max_em_iters", em.max_em_iters);
  em.em_tolerance = j.value("em_tolerance", em.em_tolerance);
  em.enumeration_cap = j.value("enumeration_cap", em.enumeration_cap);
  if (j.contains("fit")) parse_fit(j.at("fit"), em.fit);
  if (j.contains("sampler")) parse_sampler(j.at("sampler"), em.sampler);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j = json::parse(text);
  ExperimentConfig config;
  config.domain = j.value("domain", config.domain);
  if (j.contains("variants"))
    config.variants = j.at("variants").get<std::vector<std::string>>();
  if (j.contains("sweep")) config.sweep = j.at("sweep").get<std::vector<int>>();
  config.runs_per_point = j.value("runs_per_point", config.runs_per_point);
  config.master_seed = j.value("master_seed", config.master_seed);
  config.controlled_env = j.value("controlled_env", config.controlled_env);
  config.alpha_transfer_scale =
      j.value("alpha_transfer_scale", config.alpha_transfer_scale);
  if (j.contains("gridworld")) {
    const json& g = j.at("gridworld");
    config.gridworld.goal_corner = g.value("goal_corner", config.gridworld.goal_corner);
    config.gridworld.slip_probability =
        g.value("slip_probability", config.gridworld.slip_probability);
    config.gridworld.obs_per_timestep =
        g.value("obs_per_timestep", config.gridworld.obs_per_timestep);
    config.gridworld.num_trajectories =
        g.value("num_trajectories", config.gridworld.num_trajectories);
    config.gridworld.horizon = g.value("horizon", config.gridworld.horizon);
  }
  if (j.contains("onion")) {
    const json& o = j.at("onion");
    config.onion.horizon = o.value("horizon", config.onion.horizon);
    config.onion.obs_per_timestep =
        o.value("obs_per_timestep", config.onion.obs_per_timestep);
    config.onion.mirror_enabled = o.value("mirror_enabled", config.onion.mirror_enabled);
    config.onion.occlusion_probability =
        o.value("occlusion_probability", config.onion.occlusion_probability);
    config.onion.mirror_emit_probability =
        o.value("mirror_emit_probability", config.onion.mirror_emit_probability);
  }
  if (j.contains("em")) parse_em(j.at("em"), config.em);
  config.validate();
  return config;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

}  // namespace irl

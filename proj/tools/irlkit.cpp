#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "irlkit/harness.hpp"
#include "irlkit/io.hpp"
#include "irlkit/oracle.hpp"

namespace fs = std::filesystem;
using namespace irl;

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("IRLKIT_OUT");
  return env != nullptr ? env : ".";
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::vector<ResultRow> read_result_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read " + path);
  std::string line;
  check(static_cast<bool>(std::getline(in, line)) &&
            line.rfind("domain,variant,sweep_value,seed,ile,em_iterations", 0) == 0,
        "results file: bad header in " + path);
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    ResultRow row;
    std::getline(ss, row.domain, ',');
    std::getline(ss, row.variant, ',');
    std::getline(ss, field, ',');
    row.sweep_value = std::stoi(field);
    std::getline(ss, field, ',');
    row.seed = std::stoull(field);
    std::getline(ss, field, ',');
    row.ile = std::stod(field);
    std::getline(ss, field, ',');
    row.em_iterations = std::stoi(field);
    if (std::getline(ss, field, ',')) row.wall_time = std::stod(field);
    rows.push_back(std::move(row));
  }
  return rows;
}

int run_simulate(const std::string& domain, std::uint64_t seed, int elements,
                 int trajectories, const std::string& eta_name, const std::string& out) {
  fs::create_directories(out);
  EtaVariant eta = eta_variant_from_string(eta_name);
  if (domain == "gridworld") {
    GridworldSpec spec;
    spec.num_elements = elements;
    if (trajectories > 0) spec.num_trajectories = trajectories;
    GridworldDomain gw = build_gridworld(spec, seed);
    SimulatedDemo demo = simulate_gridworld_demo(gw, eta, seed);
    save_observation_log(demo.log, join(out, "observations.jsonl"));
    save_trajectories(demo.trajectories, join(out, "trajectories.jsonl"));
  } else if (domain == "onion") {
    OnionDomain onion = build_onion_mdp(OnionSpec{});
    OnionDemo demo =
        simulate_onion_demo(onion, eta, seed, trajectories > 0 ? trajectories : 10);
    save_observation_log(demo.partially_controlled, join(out, "observations.jsonl"));
    save_observation_log(demo.controlled, join(out, "controlled.jsonl"));
    save_trajectories(demo.trajectories, join(out, "trajectories.jsonl"));
  } else {
    throw InvalidInput("simulate: unknown domain " + domain);
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

int run_learn(const std::string& config_path, const std::string& variant, int sweep_value,
              int run_index) {
  ExperimentConfig config = ExperimentConfig::from_file(config_path);
  ResultRow row = run_single(config, variant, sweep_value, run_index);
  std::cout << "domain=" << row.domain << " variant=" << row.variant
            << " sweep=" << row.sweep_value << " seed=" << row.seed << " ile=" << row.ile
            << " em_iterations=" << row.em_iterations << " wall_time=" << row.wall_time
            << "\n";
  return 0;
}

int run_experiment_cmd(const std::string& config_path, const std::string& out, int jobs,
                       bool no_wall_time) {
  ExperimentConfig config = ExperimentConfig::from_file(config_path);
  fs::create_directories(out);
  std::vector<ResultRow> rows = run_experiment(config, jobs);
  write_result_rows(rows, join(out, "results.csv"), !no_wall_time);
  std::vector<SummaryRow> summary = aggregate(rows);
  write_summary(summary, join(out, "summary.csv"));
  for (const SummaryRow& s : summary) {
    std::cout << s.variant << " @ " << s.sweep_value << ": mean ile " << s.mean_ile;
    if (s.has_ci) std::cout << " [" << s.ci_low << ", " << s.ci_high << "]";
    std::cout << " (n=" << s.n << ")\n";
  }
  return 0;
}

int run_plot(const std::string& in_path, const std::string& out_path) {
  std::vector<SummaryRow> summary;
  std::ifstream probe(in_path);
  if (!probe) throw InvalidInput("cannot read " + in_path);
  std::string header;
  std::getline(probe, header);
  probe.close();
  if (header.rfind("domain,", 0) == 0)
    summary = aggregate(read_result_rows(in_path));
  else
    summary = read_summary(in_path);
  emit_plot_data(summary, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

// Brute-force sanity run: MCMC marginals against exact enumeration on a tiny
// stochastic instance and a tiny deterministic one.
int run_oracle(std::uint64_t seed, int samples, int burn_in) {
  int failures = 0;
  auto report = [&](const std::string& name, double tv) {
    bool ok = tv <= 0.05;
    std::cout << name << ": total variation " << tv << (ok ? " [ok]" : " [FAIL]")
              << "\n";
    if (!ok) ++failures;
  };

  {
    FiniteMdp mdp;
    mdp.num_states = 2;
    mdp.num_actions = 2;
    mdp.horizon = 3;
    mdp.start = {0.7, 0.3};
    mdp.transition = {0.8, 0.2, 0.4, 0.6, 0.5, 0.5, 0.1, 0.9};
    RewardModel reward;
    reward.num_features = 2;
    reward.features = {1, 0, 0, 1, 0, 0, 1, 1};
    reward.weights = {0.5, -0.3};
    SoftResult soft = soft_value_iteration(mdp, reward);

    DirichletObsModel model = DirichletObsModel::uniform(2, 2, 3, 1, 1.0);
    model.subject_alpha = {5, 1, 1, 1, 5, 1, 1, 1, 5, 2, 2, 5};
    model.confounder_alpha = {1, 3, 1};
    model.refresh_means();

    ObservationLog log;
    log.vocabulary.names = {"w0", "w1", "w2"};
    log.element_names = {"e0"};
    log.trajectories = {{{{0, {0.9, 0.1}}, {1, {0.5, 0.5}}},
                         {{2, {0.7, 0.3}}},
                         {{1, {0.2, 0.8}}, {0, {0.6, 0.4}}, {2, {0.5, 0.5}}}}};

    SamplerOptions opts;
    opts.samples = samples;
    opts.burn_in = burn_in;
    opts.update_model = false;
    opts.sweep_mode = SweepMode::PerNode;
    opts.seed = seed;
    InferenceResult result = run_inference(log, model, mdp, soft.policy, opts);
    TrajectoryPosterior exact =
        enumerate_posterior(mdp, soft.policy, log.trajectories[0], model);
    report("stochastic 2-state", posterior_total_variation(result.posteriors[0], exact));
  }

  {
    FiniteMdp mdp;
    mdp.num_states = 3;
    mdp.num_actions = 2;
    mdp.horizon = 3;
    mdp.start = {1.0, 0.0, 0.0};
    mdp.transition = {0, 1, 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0, 0, 0, 1, 0};
    RewardModel reward;
    reward.num_features = 1;
    reward.features = {0, 0, 1, 0, 0, 1};
    reward.weights = {1.0};
    SoftResult soft = soft_value_iteration(mdp, reward);

    DirichletObsModel model = DirichletObsModel::uniform(3, 2, 3, 1, 1.0);
    for (int s = 0; s < 3; ++s)
      for (int a = 0; a < 2; ++a)
        model.subject_alpha[model.subject_index(s, a) + s] = 6.0;
    model.confounder_alpha = {2, 2, 2};
    model.refresh_means();

    ObservationLog log;
    log.vocabulary.names = {"w0", "w1", "w2"};
    log.element_names = {"e0"};
    log.trajectories = {{{{0, {0.8, 0.2}}},
                         {{1, {0.6, 0.4}}, {2, {0.3, 0.7}}},
                         {{2, {0.9, 0.1}}}}};

    SamplerOptions opts;
    opts.samples = samples;
    opts.burn_in = burn_in;
    opts.update_model = false;
    opts.sweep_mode = SweepMode::WholeTrajectory;
    opts.seed = seed;
    InferenceResult result = run_inference(log, model, mdp, soft.policy, opts);
    TrajectoryPosterior exact =
        enumerate_posterior(mdp, soft.policy, log.trajectories[0], model);
    report("deterministic 3-state",
           posterior_total_variation(result.posteriors[0], exact));
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"occlusion-robust IRL toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string config_path, out = default_out_dir(), in_path;
  std::string domain = "gridworld", eta = "plausible", variant = "plausible_eta";
  int elements = 0, trajectories = 0, sweep_value = 0, run_index = 0, jobs = 1;
  int samples = 20000, burn_in = 2000;
  bool no_wall_time = false;

  CLI::App* simulate = app.add_subcommand("simulate", "emit an observation log + truth");
  simulate->add_option("--domain", domain, "gridworld | onion");
  simulate->add_option("--seed", seed);
  simulate->add_option("--elements", elements, "confounding elements (gridworld)");
  simulate->add_option("--trajectories", trajectories, "trajectory count");
  simulate->add_option("--eta", eta, "uniform | plausible | oracle");
  simulate->add_option("--out", out, "output directory");

  CLI::App* learn = app.add_subcommand("learn", "one variant on one data set");
  learn->add_option("--config", config_path)->required();
  learn->add_option("--variant", variant);
  learn->add_option("--sweep-value", sweep_value);
  learn->add_option("--run", run_index);

  CLI::App* experiment = app.add_subcommand("experiment", "full sweep");
  experiment->add_option("--config", config_path)->required();
  experiment->add_option("--out", out, "output directory");
  experiment->add_option("--jobs", jobs, "worker pool size");
  experiment->add_flag("--no-wall-time", no_wall_time,
                       "omit the wall_time column (byte-reproducible results)");

  CLI::App* plot = app.add_subcommand("plot", "summary or results -> plot data");
  plot->add_option("--in", in_path)->required();
  plot->add_option("--out", out, "output file");

  CLI::App* oracle = app.add_subcommand("oracle", "brute-force enumeration checks");
  oracle->add_option("--seed", seed);
  oracle->add_option("--samples", samples);
  oracle->add_option("--burn-in", burn_in);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed())
      return run_simulate(domain, seed, elements, trajectories, eta, out);
    if (learn->parsed()) return run_learn(config_path, variant, sweep_value, run_index);
    if (experiment->parsed())
      return run_experiment_cmd(config_path, out, jobs, no_wall_time);
    if (plot->parsed())
      return run_plot(in_path, out == default_out_dir() ? "plot_data.csv" : out);
    if (oracle->parsed()) return run_oracle(seed, samples, burn_in);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

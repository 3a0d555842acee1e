#pragma once

#include "irlkit/em.hpp"
#include "irlkit/gridworld.hpp"
#include "irlkit/onion.hpp"

namespace irl {

/// One experiment sweep: a domain, a set of learner variants, and a swept
/// quantity (confounding elements for the Gridworld, trajectory count for the
/// onion domain).
struct ExperimentConfig {
  std::string domain = "gridworld";
  std::vector<std::string> variants = {"true_trajectories"};
  std::vector<int> sweep = {0};
  int runs_per_point = 10;
  std::uint64_t master_seed = 1;
  bool controlled_env = false;  // onion: learn from the fully controlled log
  double alpha_transfer_scale = 0.1;
  GridworldSpec gridworld;
  OnionSpec onion;
  EmOptions em;

  void validate() const;
  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);
};

struct ResultRow {
  std::string domain;
  std::string variant;
  int sweep_value = 0;
  std::uint64_t seed = 0;
  double ile = 0.0;
  int em_iterations = 0;
  double wall_time = 0.0;
};

struct SummaryRow {
  std::string variant;
  int sweep_value = 0;
  int n = 0;
  double mean_ile = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool has_ci = false;
};

/// One (variant, sweep value, run) cell; deterministic in (config, inputs).
ResultRow run_single(const ExperimentConfig& config, const std::string& variant,
                     int sweep_value, int run_index);

/// The full sweep; rows come back sorted by (variant, sweep value, run).
std::vector<ResultRow> run_experiment(const ExperimentConfig& config, int jobs = 1);

/// Mean and normal-approximation 95% confidence interval per sweep point.
std::vector<SummaryRow> aggregate(const std::vector<ResultRow>& rows);

void write_result_rows(const std::vector<ResultRow>& rows, const std::string& path,
                       bool include_wall_time = true);
void write_summary(const std::vector<SummaryRow>& summary, const std::string& path);
std::vector<SummaryRow> read_summary(const std::string& path);

/// Plot-data emission: one delimited file with one curve per variant.
void emit_plot_data(const std::vector<SummaryRow>& summary, const std::string& path);

}  // namespace irl

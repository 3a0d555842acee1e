#pragma once

#include <string>
#include <vector>

#include "irlkit/mdp.hpp"

namespace irl {

// Symmetric floor added to every hyperparameter so no observation ever has
// exactly zero likelihood under any source.
constexpr double kAlphaFloor = 0.01;

struct ObservationVocabulary {
  std::vector<std::string> names;
  int size() const { return static_cast<int>(names.size()); }
};

/// One sensed symbol with its source distribution: eta[0] is the subject,
/// eta[1..] the confounding elements in log order.
struct Observation {
  int omega = 0;
  std::vector<double> eta;
};

/// The full observation stream of a demonstration: per trajectory, per
/// timestep, a bag of (omega, eta) pairs. Empty bags model full occlusion.
struct ObservationLog {
  ObservationVocabulary vocabulary;
  std::vector<std::string> element_names;
  std::vector<std::vector<std::vector<Observation>>> trajectories;
  std::string generator_config;  // free-form JSON recorded by simulators

  int num_sources() const { return 1 + static_cast<int>(element_names.size()); }
  int total_observations() const;
  void validate() const;
};

/// Dirichlet-multinomial emission model: per-(s,a) hyperparameters for the
/// subject and per-element hyperparameters for the confounders, with cached
/// mean distributions.
struct DirichletObsModel {
  int num_states = 0;
  int num_actions = 0;
  int num_symbols = 0;
  int num_elements = 0;
  std::vector<double> subject_alpha;     // [s][a][w]
  std::vector<double> confounder_alpha;  // [e][w]
  std::vector<double> subject_mean;      // derived, same shape
  std::vector<double> confounder_mean;
  std::vector<double> subject_log_mean;  // cached for the sampler
  std::vector<double> confounder_log_mean;

  static DirichletObsModel uniform(int num_states, int num_actions, int num_symbols,
                                   int num_elements, double alpha = 1.0);

  std::size_t subject_index(int s, int a) const {
    return (static_cast<std::size_t>(s) * num_actions + a) * num_symbols;
  }
  double subject_p(int s, int a, int w) const { return subject_mean[subject_index(s, a) + w]; }
  double subject_logp(int s, int a, int w) const {
    return subject_log_mean[subject_index(s, a) + w];
  }
  double confounder_p(int e, int w) const {
    return confounder_mean[static_cast<std::size_t>(e) * num_symbols + w];
  }
  double confounder_logp(int e, int w) const {
    return confounder_log_mean[static_cast<std::size_t>(e) * num_symbols + w];
  }

  /// Recompute every mean row from the hyperparameters (floor applied).
  void refresh_means();
  void validate() const;
};

/// Dirichlet mean: the alpha row normalized, after the symmetric floor.
std::vector<double> dirichlet_mean(std::vector<double> alpha_row);

/// Count-based hyperparameter fit from a fully controlled run: alpha[s,a,w] =
/// observed count of w while the subject was at (s,a), plus the floor.
std::vector<double> fit_alpha(const std::vector<Trajectory>& true_demos,
                              const ObservationLog& log, int num_states, int num_actions);

/// Multiply every entry by factor; means are unchanged, pseudo-count mass is
/// rescaled.
std::vector<double> scale_alpha(std::vector<double> alpha, double factor);

/// Elementwise convex combination c * alpha_dot + (1-c) * alpha_prev.
std::vector<double> blend_alpha(const std::vector<double>& alpha_prev,
                                const std::vector<double>& alpha_dot, double c);

}  // namespace irl

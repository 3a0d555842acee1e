#include "irlkit/obs_model.hpp"

#include <algorithm>
#include <cmath>

namespace irl {

int ObservationLog::total_observations() const {
  int n = 0;
  for (const auto& traj : trajectories)
    for (const auto& step : traj) n += static_cast<int>(step.size());
  return n;
}

void ObservationLog::validate() const {
  check(vocabulary.size() > 0, "ObservationLog: empty vocabulary");
  const int sources = num_sources();
  for (const auto& traj : trajectories)
    for (const auto& step : traj)
      for (const Observation& obs : step) {
        check(obs.omega >= 0 && obs.omega < vocabulary.size(),
              "ObservationLog: symbol id out of range");
        check(static_cast<int>(obs.eta.size()) == sources,
              "ObservationLog: eta length mismatch");
        double total = 0.0;
        for (double p : obs.eta) {
          check(p >= 0.0, "ObservationLog: negative eta entry");
          total += p;
        }
        check(std::abs(total - 1.0) <= 1e-9, "ObservationLog: eta does not sum to 1");
      }
}

std::vector<double> dirichlet_mean(std::vector<double> alpha_row) {
  check(!alpha_row.empty(), "dirichlet_mean: empty row");
  double total = 0.0;
  for (double& a : alpha_row) {
    check(a >= 0.0, "dirichlet_mean: negative hyperparameter");
    a += kAlphaFloor;
    total += a;
  }
  for (double& a : alpha_row) a /= total;
  return alpha_row;
}

DirichletObsModel DirichletObsModel::uniform(int num_states, int num_actions,
                                             int num_symbols, int num_elements,
                                             double alpha) {
  DirichletObsModel m;
  m.num_states = num_states;
  m.num_actions = num_actions;
  m.num_symbols = num_symbols;
  m.num_elements = num_elements;
  m.subject_alpha.assign(
      static_cast<std::size_t>(num_states) * num_actions * num_symbols, alpha);
  m.confounder_alpha.assign(static_cast<std::size_t>(num_elements) * num_symbols, alpha);
  m.refresh_means();
  return m;
}

void DirichletObsModel::refresh_means() {
  auto normalize_rows = [this](const std::vector<double>& alpha, std::vector<double>& mean,
                               std::vector<double>& log_mean) {
    mean.resize(alpha.size());
    log_mean.resize(alpha.size());
    for (std::size_t off = 0; off < alpha.size(); off += num_symbols) {
      double total = 0.0;
      for (int w = 0; w < num_symbols; ++w) total += alpha[off + w] + kAlphaFloor;
      for (int w = 0; w < num_symbols; ++w) {
        double p = (alpha[off + w] + kAlphaFloor) / total;
        mean[off + w] = p;
        log_mean[off + w] = std::log(p);
      }
    }
  };
  normalize_rows(subject_alpha, subject_mean, subject_log_mean);
  normalize_rows(confounder_alpha, confounder_mean, confounder_log_mean);
}

void DirichletObsModel::validate() const {
  check(subject_alpha.size() ==
            static_cast<std::size_t>(num_states) * num_actions * num_symbols,
        "DirichletObsModel: subject alpha shape");
  check(confounder_alpha.size() == static_cast<std::size_t>(num_elements) * num_symbols,
        "DirichletObsModel: confounder alpha shape");
  for (double a : subject_alpha) check(a >= 0.0, "DirichletObsModel: negative alpha");
  for (double a : confounder_alpha) check(a >= 0.0, "DirichletObsModel: negative alpha");
  auto check_rows = [this](const std::vector<double>& mean) {
    for (std::size_t off = 0; off < mean.size(); off += num_symbols) {
      double total = 0.0;
      for (int w = 0; w < num_symbols; ++w) total += mean[off + w];
      check(std::abs(total - 1.0) <= 1e-9, "DirichletObsModel: mean row not normalized");
    }
  };
  check_rows(subject_mean);
  check_rows(confounder_mean);
}

std::vector<double> fit_alpha(const std::vector<Trajectory>& true_demos,
                              const ObservationLog& log, int num_states, int num_actions) {
  const int W = log.vocabulary.size();
  std::vector<double> alpha(static_cast<std::size_t>(num_states) * num_actions * W, 0.0);
  check(true_demos.size() == log.trajectories.size(),
        "fit_alpha: trajectory/log count mismatch");
  for (std::size_t i = 0; i < true_demos.size(); ++i) {
    const auto& steps = true_demos[i].steps;
    const auto& obs = log.trajectories[i];
    check(steps.size() == obs.size(), "fit_alpha: trajectory/log length mismatch");
    for (std::size_t t = 0; t < steps.size(); ++t) {
      auto [s, a] = steps[t];
      for (const Observation& o : obs[t])
        alpha[(static_cast<std::size_t>(s) * num_actions + a) * W + o.omega] += 1.0;
    }
  }
  return alpha;
}

std::vector<double> scale_alpha(std::vector<double> alpha, double factor) {
  check(factor > 0.0, "scale_alpha: factor must be positive");
  for (double& a : alpha) a *= factor;
  return alpha;
}

std::vector<double> blend_alpha(const std::vector<double>& alpha_prev,
                                const std::vector<double>& alpha_dot, double c) {
  check(c > 0.0 && c < 1.0, "blend_alpha: c must be in (0,1)");
  check(alpha_prev.size() == alpha_dot.size(), "blend_alpha: shape mismatch");
  std::vector<double> out(alpha_prev.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = c * alpha_dot[i] + (1.0 - c) * alpha_prev[i];
  return out;
}

}  // namespace irl

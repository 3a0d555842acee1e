#include "irlkit/mdp.hpp"

#include <algorithm>
#include <cmath>

namespace irl {

namespace {
constexpr double kRowTol = 1e-9;
constexpr double kViTol = 1e-8;
constexpr int kViMaxIters = 100000;
}  // namespace

void FiniteMdp::validate() const {
  check(num_states >= 1 && num_actions >= 1, "FiniteMdp: empty state or action set");
  check(horizon >= 1, "FiniteMdp: horizon must be >= 1");
  check(discount > 0.0 && discount <= 1.0, "FiniteMdp: discount must be in (0,1]");
  check(transition.size() ==
            static_cast<std::size_t>(num_states) * num_actions * num_states,
        "FiniteMdp: transition table size mismatch");
  check(start.size() == static_cast<std::size_t>(num_states),
        "FiniteMdp: start distribution size mismatch");
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      double row = 0.0;
      for (int s2 = 0; s2 < num_states; ++s2) {
        double p = trans(s, a, s2);
        check(p >= 0.0, "FiniteMdp: negative transition probability");
        row += p;
      }
      check(std::abs(row - 1.0) <= kRowTol, "FiniteMdp: transition row does not sum to 1");
    }
  }
  double total = 0.0;
  for (double p : start) {
    check(p >= 0.0, "FiniteMdp: negative start probability");
    total += p;
  }
  check(std::abs(total - 1.0) <= kRowTol, "FiniteMdp: start distribution does not sum to 1");
}

bool FiniteMdp::mostly_deterministic() const {
  int point_rows = 0;
  for (int s = 0; s < num_states; ++s)
    for (int a = 0; a < num_actions; ++a) {
      double mx = 0.0;
      for (int s2 = 0; s2 < num_states; ++s2) mx = std::max(mx, trans(s, a, s2));
      if (mx >= 1.0 - kRowTol) ++point_rows;
    }
  return 2 * point_rows >= num_states * num_actions;
}

double Policy::prob_at(int t, int s, int a, int num_actions) const {
  if (kind == Kind::Deterministic) return action_at(t, s) == a ? 1.0 : 0.0;
  return table(t)[static_cast<std::size_t>(s) * num_actions + a];
}

Policy Policy::to_stochastic(int num_states, int num_actions) const {
  if (kind == Kind::Stochastic) return *this;
  Policy out;
  out.kind = Kind::Stochastic;
  out.prob.reserve(act.size());
  for (const auto& table : act) {
    std::vector<double> row(static_cast<std::size_t>(num_states) * num_actions, 0.0);
    for (int s = 0; s < num_states; ++s)
      row[static_cast<std::size_t>(s) * num_actions + table[s]] = 1.0;
    out.prob.push_back(std::move(row));
  }
  return out;
}

void Policy::validate(int num_states, int num_actions) const {
  if (kind == Kind::Deterministic) {
    check(!act.empty(), "Policy: no action tables");
    for (const auto& table : act) {
      check(table.size() == static_cast<std::size_t>(num_states), "Policy: table size");
      for (int a : table) check(a >= 0 && a < num_actions, "Policy: action out of range");
    }
    return;
  }
  check(!prob.empty(), "Policy: no probability tables");
  for (const auto& table : prob) {
    check(table.size() == static_cast<std::size_t>(num_states) * num_actions,
          "Policy: table size");
    for (int s = 0; s < num_states; ++s) {
      double row = 0.0;
      for (int a = 0; a < num_actions; ++a) {
        double p = table[static_cast<std::size_t>(s) * num_actions + a];
        check(p >= 0.0, "Policy: negative probability");
        row += p;
      }
      check(std::abs(row - 1.0) <= kRowTol, "Policy: row does not sum to 1");
    }
  }
}

namespace {

// One backward step: given V at t+1, fill Q(s,a) = r(s,a) + gamma * E[V(s')].
void backup_q(const FiniteMdp& mdp, const RewardModel& reward, double gamma,
              const std::vector<double>& next_v, std::vector<double>& q) {
  const int S = mdp.num_states, A = mdp.num_actions;
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      double ev = 0.0;
      const double* row = &mdp.transition[(static_cast<std::size_t>(s) * A + a) * S];
      for (int s2 = 0; s2 < S; ++s2) ev += row[s2] * next_v[s2];
      q[static_cast<std::size_t>(s) * A + a] = reward.reward(s, a, A) + gamma * ev;
    }
  }
}

void check_reward(const RewardModel& reward) {
  for (double w : reward.weights)
    check(std::isfinite(w), "RewardModel: non-finite weight");
}

}  // namespace

SolveResult solve_optimal(const FiniteMdp& mdp, const RewardModel& reward,
                          bool discounted) {
  mdp.validate();
  check_reward(reward);
  const int S = mdp.num_states, A = mdp.num_actions;
  SolveResult out;
  out.policy.kind = Policy::Kind::Deterministic;
  std::vector<double> v(S, 0.0), q(static_cast<std::size_t>(S) * A, 0.0);

  if (!discounted) {
    out.policy.act.assign(mdp.horizon, std::vector<int>(S, 0));
    for (int t = mdp.horizon - 1; t >= 0; --t) {
      backup_q(mdp, reward, 1.0, v, q);
      for (int s = 0; s < S; ++s) {
        int best = 0;
        double best_q = q[static_cast<std::size_t>(s) * A];
        for (int a = 1; a < A; ++a) {
          double qa = q[static_cast<std::size_t>(s) * A + a];
          if (qa > best_q) { best_q = qa; best = a; }
        }
        out.policy.act[t][s] = best;
        v[s] = best_q;
      }
    }
    out.value = v;
    return out;
  }

  check(mdp.discount < 1.0, "solve_optimal: discounted mode needs discount < 1");
  out.policy.act.assign(1, std::vector<int>(S, 0));
  for (int it = 0; it < kViMaxIters; ++it) {
    backup_q(mdp, reward, mdp.discount, v, q);
    double delta = 0.0;
    for (int s = 0; s < S; ++s) {
      int best = 0;
      double best_q = q[static_cast<std::size_t>(s) * A];
      for (int a = 1; a < A; ++a) {
        double qa = q[static_cast<std::size_t>(s) * A + a];
        if (qa > best_q) { best_q = qa; best = a; }
      }
      out.policy.act[0][s] = best;
      delta = std::max(delta, std::abs(best_q - v[s]));
      v[s] = best_q;
    }
    if (delta < kViTol) break;
  }
  out.value = v;
  return out;
}

std::vector<double> evaluate_policy(const FiniteMdp& mdp, const RewardModel& reward,
                                    const Policy& policy, bool discounted) {
  mdp.validate();
  check_reward(reward);
  policy.validate(mdp.num_states, mdp.num_actions);
  const int S = mdp.num_states, A = mdp.num_actions;
  std::vector<double> v(S, 0.0), q(static_cast<std::size_t>(S) * A, 0.0);

  auto apply = [&](int t, double gamma) {
    backup_q(mdp, reward, gamma, v, q);
    for (int s = 0; s < S; ++s) {
      double vs = 0.0;
      for (int a = 0; a < A; ++a)
        vs += policy.prob_at(t, s, a, A) * q[static_cast<std::size_t>(s) * A + a];
      v[s] = vs;
    }
  };

  if (!discounted) {
    for (int t = mdp.horizon - 1; t >= 0; --t) apply(t, 1.0);
    return v;
  }
  check(mdp.discount < 1.0, "evaluate_policy: discounted mode needs discount < 1");
  for (int it = 0; it < kViMaxIters; ++it) {
    std::vector<double> prev = v;
    apply(0, mdp.discount);
    double delta = 0.0;
    for (int s = 0; s < S; ++s) delta = std::max(delta, std::abs(prev[s] - v[s]));
    if (delta < kViTol) break;
  }
  return v;
}

double ile(const FiniteMdp& mdp, const RewardModel& true_reward,
           const Policy& expert_policy, const Policy& learned_policy, bool discounted) {
  std::vector<double> ve = evaluate_policy(mdp, true_reward, expert_policy, discounted);
  std::vector<double> vl = evaluate_policy(mdp, true_reward, learned_policy, discounted);
  double err = 0.0;
  for (int s = 0; s < mdp.num_states; ++s) err += std::abs(ve[s] - vl[s]);
  return err;
}

SoftResult soft_value_iteration(const FiniteMdp& mdp, const RewardModel& reward,
                                bool discounted) {
  mdp.validate();
  check_reward(reward);
  const int S = mdp.num_states, A = mdp.num_actions;
  SoftResult out;
  out.policy.kind = Policy::Kind::Stochastic;
  std::vector<double> v(S, 0.0), q(static_cast<std::size_t>(S) * A, 0.0);

  // Log-sum-exp backup with max shift; writes the induced softmax policy row.
  auto soft_backup = [&](double gamma, std::vector<double>& table) {
    backup_q(mdp, reward, gamma, v, q);
    for (int s = 0; s < S; ++s) {
      const double* qs = &q[static_cast<std::size_t>(s) * A];
      double vs = log_sum_exp(std::span<const double>(qs, A));
      for (int a = 0; a < A; ++a)
        table[static_cast<std::size_t>(s) * A + a] = std::exp(qs[a] - vs);
      v[s] = vs;
    }
  };

  if (!discounted) {
    out.policy.prob.assign(mdp.horizon,
                           std::vector<double>(static_cast<std::size_t>(S) * A, 0.0));
    out.value.assign(mdp.horizon, std::vector<double>(S, 0.0));
    for (int t = mdp.horizon - 1; t >= 0; --t) {
      soft_backup(1.0, out.policy.prob[t]);
      out.value[t] = v;
    }
    return out;
  }

  check(mdp.discount < 1.0,
        "soft_value_iteration: undiscounted infinite horizon diverges");
  out.policy.prob.assign(1, std::vector<double>(static_cast<std::size_t>(S) * A, 0.0));
  for (int it = 0; it < kViMaxIters; ++it) {
    std::vector<double> prev = v;
    soft_backup(mdp.discount, out.policy.prob[0]);
    double delta = 0.0;
    for (int s = 0; s < S; ++s) delta = std::max(delta, std::abs(prev[s] - v[s]));
    if (delta < kViTol) break;
  }
  out.value.assign(1, v);
  return out;
}

double soft_log_partition(const FiniteMdp& mdp, const SoftResult& soft) {
  double z = 0.0;
  for (int s = 0; s < mdp.num_states; ++s) z += mdp.start[s] * soft.value.front()[s];
  return z;
}

Trajectory rollout(const FiniteMdp& mdp, const Policy& policy, Rng& rng) {
  Trajectory traj;
  int s = sample_categorical(rng, mdp.start);
  for (int t = 0; t < mdp.horizon; ++t) {
    int a;
    if (policy.kind == Policy::Kind::Deterministic) {
      a = policy.action_at(t, s);
    } else {
      const auto& table = policy.table(t);
      a = sample_categorical(
          rng, std::span<const double>(&table[static_cast<std::size_t>(s) * mdp.num_actions],
                                       mdp.num_actions));
    }
    traj.steps.emplace_back(s, a);
    if (mdp.is_terminal(s, a)) break;
    const double* row =
        &mdp.transition[(static_cast<std::size_t>(s) * mdp.num_actions + a) * mdp.num_states];
    s = sample_categorical(rng, std::span<const double>(row, mdp.num_states));
  }
  return traj;
}

}  // namespace irl

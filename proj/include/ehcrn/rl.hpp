#pragma once

// Model-free tabular Q-learning with epsilon-greedy exploration. The learner
// only sees sampled transitions through the Environment interface.

#include <cstdint>
#include <functional>
#include <vector>

#include "ehcrn/model.hpp"
#include "ehcrn/rng.hpp"

namespace ehcrn {

struct QTable {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> q;
  std::vector<std::uint64_t> visits;

  QTable() = default;
  QTable(std::size_t states, std::size_t actions)
      : n_states(states), n_actions(actions), q(states * actions, 0.0), visits(states * actions, 0) {}

  double& at(std::size_t s, std::size_t a) { return q[s * n_actions + a]; }
  double at(std::size_t s, std::size_t a) const { return q[s * n_actions + a]; }
  std::uint64_t visit_count(std::size_t s, std::size_t a) const { return visits[s * n_actions + a]; }

  /// Lowest-index maximizer of row s.
  std::uint32_t greedy_action(std::size_t s) const;
  double max_value(std::size_t s) const;
  Policy greedy_policy() const;
};

struct LearningConfig {
  double epsilon = 0.04;
  std::uint64_t n_iterations = 100;
  double omega = 0.8;  // step-size exponent in (0.5, 1]
  std::uint64_t seed = 1;
  std::uint64_t log_every = 0;  // 0 disables the throughput log
};

/// 1 / (1 + visit_count)^omega.
double learning_rate(std::uint64_t visit_count, double omega);

std::uint32_t epsilon_greedy(const QTable& table, std::size_t state, double epsilon, Rng& rng);

/// Robbins-Monro update of the single visited cell (s, a).
void q_update(QTable& table, std::size_t s, std::uint32_t a, double reward, std::size_t s_next,
              double gamma, double omega);

struct StepResult {
  std::size_t next = 0;
  double reward = 0.0;
  bool terminated = false;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::size_t n_states() const = 0;
  virtual std::size_t n_actions() const = 0;
  virtual std::size_t reset(Rng& rng) = 0;
  virtual StepResult step(std::size_t state, std::uint32_t action, Rng& rng) = 0;
};

/// Live harvest-or-transmit link: samples the Markov chains and applies the
/// battery dynamics slot by slot. Each slot ends the episode with probability
/// 1 - gamma; the next reset draws a uniform exogenous state with battery B_0.
class EhCrnEnvironment final : public Environment {
 public:
  EhCrnEnvironment(SystemParams params, MarkovSpec markov, double battery_step);

  std::size_t n_states() const override { return space_.size(); }
  std::size_t n_actions() const override { return params_.power_grid.size(); }
  std::size_t reset(Rng& rng) override;
  StepResult step(std::size_t state, std::uint32_t action, Rng& rng) override;

  const StateSpace& space() const { return space_; }

 private:
  SystemParams params_;
  MarkovSpec markov_;
  StateSpace space_;
};

/// Samples a given finite MDP; used for small teaching problems.
class TabularEnvironment final : public Environment {
 public:
  TabularEnvironment(MdpTensors mdp, double gamma, std::vector<double> initial);

  std::size_t n_states() const override { return mdp_.n_states(); }
  std::size_t n_actions() const override { return mdp_.n_actions(); }
  std::size_t reset(Rng& rng) override;
  StepResult step(std::size_t state, std::uint32_t action, Rng& rng) override;

 private:
  MdpTensors mdp_;
  double gamma_;
  std::vector<double> initial_;
};

struct LearningPoint {
  std::uint64_t iteration = 0;
  double epsilon = 0.0;
  double throughput = 0.0;
};

struct LearningResult {
  QTable table;
  Policy policy;
  std::vector<LearningPoint> log;
};

/// Throughput estimate of a greedy policy, used for the learning curve.
using PolicyEvaluator = std::function<double(const Policy&)>;

LearningResult q_learning(Environment& env, const LearningConfig& config, double gamma,
                          const PolicyEvaluator& evaluator = {});

}  // namespace ehcrn

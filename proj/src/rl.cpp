#include "ehcrn/rl.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ehcrn {

std::uint32_t QTable::greedy_action(std::size_t s) const {
  std::uint32_t best = 0;
  for (std::uint32_t a = 1; a < n_actions; ++a) {
    if (at(s, a) > at(s, best)) best = a;
  }
  return best;
}

double QTable::max_value(std::size_t s) const { return at(s, greedy_action(s)); }

Policy QTable::greedy_policy() const {
  Policy p;
  p.actions.resize(n_states);
  for (std::size_t s = 0; s < n_states; ++s) p.actions[s] = greedy_action(s);
  return p;
}

double learning_rate(std::uint64_t visit_count, double omega) {
  if (!(omega > 0.5 && omega <= 1.0)) throw std::invalid_argument("omega must lie in (0.5, 1]");
  return 1.0 / std::pow(1.0 + static_cast<double>(visit_count), omega);
}

std::uint32_t epsilon_greedy(const QTable& table, std::size_t state, double epsilon, Rng& rng) {
  if (uniform01(rng) < epsilon) return static_cast<std::uint32_t>(uniform_index(table.n_actions, rng));
  return table.greedy_action(state);
}

void q_update(QTable& table, std::size_t s, std::uint32_t a, double reward, std::size_t s_next,
              double gamma, double omega) {
  const std::size_t cell = s * table.n_actions + a;
  const double alpha = learning_rate(table.visits[cell], omega);
  const double target = reward + gamma * table.max_value(s_next);
  table.q[cell] = (1.0 - alpha) * table.q[cell] + alpha * target;
  ++table.visits[cell];
}

// ---------------------------------------------------------------------------

EhCrnEnvironment::EhCrnEnvironment(SystemParams params, MarkovSpec markov, double battery_step)
    : params_(std::move(params)), markov_(std::move(markov)), space_(params_, markov_, battery_step) {
  validate(params_, markov_);
}

std::size_t EhCrnEnvironment::reset(Rng& rng) {
  SystemState s;
  s.h_ps_idx = static_cast<std::uint32_t>(uniform_index(space_.channel_levels(), rng));
  s.h_ss_idx = static_cast<std::uint32_t>(uniform_index(space_.channel_levels(), rng));
  s.e_idx = static_cast<std::uint32_t>(uniform_index(space_.energy_levels(), rng));
  s.b_idx = space_.battery_floor(params_.initial_battery);
  return space_.index(s);
}

StepResult EhCrnEnvironment::step(std::size_t state, std::uint32_t action, Rng& rng) {
  const SystemState s = space_.state(state);
  const double battery = space_.battery_value(s.b_idx);
  const double e_h = markov_.energy_values[s.e_idx];
  StepResult out;
  double next_battery;
  if (action == kHarvestAction) {
    next_battery = battery_step(battery, {true, 0.0}, e_h, params_);
  } else {
    const double p = feasible_grid_power(params_, params_.power_grid.at(action), battery);
    next_battery = battery_step(battery, {false, p}, e_h, params_);
    out.reward = instantaneous_rate(markov_.channel_values[s.h_ss_idx], markov_.channel_values[s.h_ps_idx], p,
                                    params_);
  }
  SystemState n;
  n.h_ps_idx = static_cast<std::uint32_t>(sample_categorical(markov_.channel_tm[s.h_ps_idx], rng));
  n.h_ss_idx = static_cast<std::uint32_t>(sample_categorical(markov_.channel_tm[s.h_ss_idx], rng));
  n.e_idx = static_cast<std::uint32_t>(sample_categorical(markov_.energy_tm[s.e_idx], rng));
  n.b_idx = space_.battery_floor(next_battery);
  out.next = space_.index(n);
  out.terminated = uniform01(rng) >= params_.gamma;
  return out;
}

TabularEnvironment::TabularEnvironment(MdpTensors mdp, double gamma, std::vector<double> initial)
    : mdp_(std::move(mdp)), gamma_(gamma), initial_(std::move(initial)) {
  if (initial_.size() != mdp_.n_states()) throw std::invalid_argument("initial distribution size mismatch");
}

std::size_t TabularEnvironment::reset(Rng& rng) { return sample_categorical(initial_, rng); }

StepResult TabularEnvironment::step(std::size_t state, std::uint32_t action, Rng& rng) {
  const auto row = mdp_.transitions(state, action);
  std::vector<double> probs(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) probs[i] = row[i].prob;
  StepResult out;
  out.next = row[sample_categorical(probs, rng)].next;
  out.reward = mdp_.reward(state, action);
  out.terminated = uniform01(rng) >= gamma_;
  return out;
}

// ---------------------------------------------------------------------------

LearningResult q_learning(Environment& env, const LearningConfig& config, double gamma,
                          const PolicyEvaluator& evaluator) {
  if (!(config.epsilon >= 0.0 && config.epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  learning_rate(0, config.omega);  // validates omega

  LearningResult out;
  out.table = QTable(env.n_states(), env.n_actions());
  const bool logging = config.log_every > 0 && evaluator;
  if (logging) out.log.push_back({0, config.epsilon, evaluator(out.table.greedy_policy())});

  Rng rng(config.seed);
  std::size_t s = env.reset(rng);
  for (std::uint64_t i = 1; i <= config.n_iterations; ++i) {
    const std::uint32_t a = epsilon_greedy(out.table, s, config.epsilon, rng);
    const StepResult r = env.step(s, a, rng);
    q_update(out.table, s, a, r.reward, r.next, gamma, config.omega);
    s = r.terminated ? env.reset(rng) : r.next;
    if (logging && i % config.log_every == 0) {
      out.log.push_back({i, config.epsilon, evaluator(out.table.greedy_policy())});
    }
  }
  out.policy = out.table.greedy_policy();
  return out;
}

}  // namespace ehcrn

#pragma once

// Environment model of a slotted energy-harvesting secondary transmitter in an
// underlay cognitive radio link: Markov channel/energy processes, battery
// dynamics, per-slot rate, and the enumerated MDP built on top of them.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ehcrn/rng.hpp"

namespace ehcrn {

using TransitionMatrix = std::vector<std::vector<double>>;

/// Physical constants of the link. All quantities in SI units (W, J, s).
struct SystemParams {
  double primary_power = 2e-3;       // P_p
  double noise_power = 1e-12;        // sigma_n^2
  double interference_cap = 0.4e-9;  // P_int, worst case at the primary receiver
  double efficiency = 1.0;           // eta
  double initial_battery = 0.0;      // B_0
  double battery_capacity = 10e-3;   // B_max
  double gamma = 0.9;                // survival probability, also the discount factor
  double slot_length = 1.0;          // tau
  std::vector<double> power_grid;    // allowed transmit powers, ascending, starts at 0
};

/// Finite value sets and first-order transition matrices of the exogenous processes.
/// The same channel chain drives every link gain independently.
struct MarkovSpec {
  std::vector<double> channel_values;
  std::vector<double> energy_values;
  TransitionMatrix channel_tm;
  TransitionMatrix energy_tm;
};

class InfeasibleAction : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Throws std::invalid_argument describing the first violated invariant.
void validate(const MarkovSpec& markov);
void validate(const SystemParams& params, const MarkovSpec& markov);

/// Largest power that keeps worst-case interference within the cap: P_int / h_best.
double max_power(const SystemParams& params, const MarkovSpec& markov);

/// {0, step, 2 step, ..., p_max}; p_max must be a multiple of step.
std::vector<double> make_power_grid(double p_max, double step);

/// Channel-to-interference-plus-noise gain h_ss / (sigma^2 + h_ps P_p), in 1/W.
double effective_gain(double h_ss, double h_ps, const SystemParams& params);

/// log2(1 + h_ss P_s / (sigma^2 + h_ps P_p)); undiscounted.
double instantaneous_rate(double h_ss, double h_ps, double p_s, const SystemParams& params);

struct Action {
  bool harvest = true;
  double power = 0.0;
};

/// Next (continuous) battery level. Throws InfeasibleAction when the slot's
/// transmit energy exceeds the stored energy.
double battery_step(double battery, const Action& action, double harvestable,
                    const SystemParams& params);

/// Largest grid power not exceeding `requested` that the battery can pay for.
double feasible_grid_power(const SystemParams& params, double requested, double battery);

// MDP action indexing: 0 is harvest, k >= 1 transmits at power_grid[k].
inline constexpr std::uint32_t kHarvestAction = 0;
std::size_t action_count(const SystemParams& params);
Action action_of(const SystemParams& params, std::uint32_t action_index);

struct SystemState {
  std::uint32_t h_ps_idx = 0;
  std::uint32_t h_ss_idx = 0;
  std::uint32_t e_idx = 0;
  std::uint32_t b_idx = 0;

  friend bool operator==(const SystemState&, const SystemState&) = default;
};

/// Enumeration of (h_ps, h_ss, E_H, B) with a uniformly quantized battery.
/// Index layout: ((h_ps * M_C + h_ss) * M_E + e) * n_battery + b.
class StateSpace {
 public:
  StateSpace(const SystemParams& params, const MarkovSpec& markov, double battery_step);

  std::size_t size() const { return n_channel_ * n_channel_ * n_energy_ * n_battery_; }
  std::size_t channel_levels() const { return n_channel_; }
  std::size_t energy_levels() const { return n_energy_; }
  std::size_t battery_levels() const { return n_battery_; }
  std::size_t exogenous_count() const { return n_channel_ * n_channel_ * n_energy_; }
  double battery_step() const { return step_; }

  std::size_t index(const SystemState& s) const;
  SystemState state(std::size_t index) const;
  std::vector<SystemState> states() const;

  std::size_t exogenous_index(std::uint32_t h_ps, std::uint32_t h_ss, std::uint32_t e) const;
  std::size_t index(std::size_t exogenous, std::uint32_t b) const { return exogenous * n_battery_ + b; }

  double battery_value(std::uint32_t b) const { return step_ * static_cast<double>(b); }
  /// Grid index at or below `battery` (never rounds energy up).
  std::uint32_t battery_floor(double battery) const;

 private:
  std::size_t n_channel_;
  std::size_t n_energy_;
  std::size_t n_battery_;
  double step_;
};

/// `enumerate_states` in operation form; throws std::invalid_argument on grid misalignment.
StateSpace enumerate_states(const SystemParams& params, const MarkovSpec& markov,
                            double battery_step);

struct Transition {
  std::uint32_t next;
  double prob;
};

/// Sparse transition tensor T[s, k, a] (one row per (s, a)) and expected reward C[s, a].
class MdpTensors {
 public:
  MdpTensors() = default;
  /// rows[s * n_actions + a] lists the nonzero successors of (s, a).
  MdpTensors(std::size_t n_states, std::size_t n_actions,
             const std::vector<std::vector<Transition>>& rows, std::vector<double> rewards);

  /// Dense construction: transition[(s * n_states + k) * n_actions + a], reward[s * n_actions + a].
  static MdpTensors from_dense(std::size_t n_states, std::size_t n_actions,
                               std::span<const double> transition, std::span<const double> reward);

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }

  std::span<const Transition> transitions(std::size_t s, std::size_t a) const {
    const std::size_t row = s * n_actions_ + a;
    return {entries_.data() + offsets_[row], entries_.data() + offsets_[row + 1]};
  }
  double reward(std::size_t s, std::size_t a) const { return rewards_[s * n_actions_ + a]; }
  double probability(std::size_t s, std::size_t k, std::size_t a) const;
  double max_reward() const;

  /// Largest |1 - sum_k T[s,k,a]| over all (s, a).
  double stochasticity_error() const;

 private:
  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<Transition> entries_;
  std::vector<double> rewards_;
};

/// Joint exogenous transition probability (h_ps, h_ss, e) -> (h_ps', h_ss', e').
double exogenous_probability(const MarkovSpec& markov, const StateSpace& space,
                             std::size_t from, std::size_t to);

MdpTensors build_mdp(const SystemParams& params, const MarkovSpec& markov, const StateSpace& space);

struct Trajectory {
  std::vector<std::uint32_t> h_ss_idx;
  std::vector<std::uint32_t> h_ps_idx;
  std::vector<std::uint32_t> e_idx;
  std::vector<double> h_ss;
  std::vector<double> h_ps;
  std::vector<double> e_h;

  std::size_t size() const { return h_ss.size(); }
};

/// Starting exogenous state; uniform over (h_ps, h_ss, E_H) unless fixed.
struct InitialDistribution {
  struct Fixed {
    std::uint32_t h_ps_idx;
    std::uint32_t h_ss_idx;
    std::uint32_t e_idx;
  };
  std::optional<Fixed> fixed;
};

Trajectory sample_trajectory(const MarkovSpec& markov, std::size_t n_slots, std::uint64_t seed,
                             const InitialDistribution& initial = {});

/// Rebuilds a trajectory from raw values by matching them to the value sets.
Trajectory trajectory_from_values(const MarkovSpec& markov, std::vector<double> h_ss,
                                  std::vector<double> h_ps, std::vector<double> e_h);

struct Policy {
  std::vector<std::uint32_t> actions;

  std::size_t size() const { return actions.size(); }
  std::uint32_t operator[](std::size_t s) const { return actions[s]; }
  friend bool operator==(const Policy&, const Policy&) = default;
};

/// Per-slot checks of the physical constraints over a replayed run.
struct InvariantCounters {
  std::uint64_t slots = 0;
  std::uint64_t battery_violations = 0;
  std::uint64_t power_violations = 0;
  std::uint64_t interference_violations = 0;
  std::uint64_t neutrality_violations = 0;

  std::uint64_t total_violations() const {
    return battery_violations + power_violations + interference_violations + neutrality_violations;
  }
  InvariantCounters& operator+=(const InvariantCounters& o);
};

struct ReplayResult {
  double throughput = 0.0;  // sum_i gamma^i (1 - I_H) rate_i, i from 1
  std::size_t transmit_slots = 0;
  std::size_t harvest_slots = 0;
  std::vector<double> powers;
  InvariantCounters invariants;
};

/// Runs a stationary policy along a known trajectory starting from B_0.
ReplayResult replay_policy(const Policy& policy, const StateSpace& space, const SystemParams& params,
                           const MarkovSpec& markov, const Trajectory& trajectory);

struct SimulationResult {
  double mean = 0.0;
  double std_error = 0.0;
  double mean_transmit_slots = 0.0;
  double mean_harvest_slots = 0.0;
  std::size_t episodes = 0;
  InvariantCounters invariants;
};

/// Monte-Carlo estimate of the discounted throughput over `n_slots`-slot episodes.
/// Episode e uses the trajectory sampled with derive_seed(seed, e).
SimulationResult simulate_policy(const Policy& policy, const StateSpace& space,
                                 const SystemParams& params, const MarkovSpec& markov,
                                 std::size_t n_slots, std::size_t episodes, std::uint64_t seed,
                                 bool parallel = true);

}  // namespace ehcrn

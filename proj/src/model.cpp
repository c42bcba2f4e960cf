#include "ehcrn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ehcrn {

namespace {

constexpr double kStochasticTol = 1e-12;
constexpr double kGridTol = 1e-12;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void validate_matrix(const TransitionMatrix& tm, std::size_t n, const char* name) {
  require(tm.size() == n, std::string(name) + ": expected " + std::to_string(n) + " rows");
  for (std::size_t i = 0; i < n; ++i) {
    require(tm[i].size() == n, std::string(name) + ": row " + std::to_string(i) + " has wrong length");
    double sum = 0.0;
    for (double p : tm[i]) {
      require(std::isfinite(p) && p >= 0.0, std::string(name) + ": negative or non-finite entry");
      sum += p;
    }
    require(std::abs(sum - 1.0) <= kStochasticTol,
            std::string(name) + ": row " + std::to_string(i) + " does not sum to 1");
  }
}

void validate_values(const std::vector<double>& v, const char* name) {
  require(!v.empty(), std::string(name) + " is empty");
  for (double x : v) {
    require(std::isfinite(x) && x > 0.0, std::string(name) + " must be strictly positive and finite");
  }
}

double h_best(const MarkovSpec& markov) {
  return *std::max_element(markov.channel_values.begin(), markov.channel_values.end());
}

}  // namespace

void validate(const MarkovSpec& markov) {
  validate_values(markov.channel_values, "channel_values");
  validate_values(markov.energy_values, "energy_values");
  validate_matrix(markov.channel_tm, markov.channel_values.size(), "channel_tm");
  validate_matrix(markov.energy_tm, markov.energy_values.size(), "energy_tm");
}

void validate(const SystemParams& p, const MarkovSpec& markov) {
  validate(markov);
  require(p.gamma > 0.0 && p.gamma < 1.0, "gamma must lie in (0, 1)");
  require(p.efficiency > 0.0 && p.efficiency <= 1.0, "efficiency must lie in (0, 1]");
  require(p.primary_power >= 0.0 && p.noise_power >= 0.0 && p.interference_cap >= 0.0,
          "powers must be nonnegative");
  require(p.initial_battery >= 0.0 && p.battery_capacity >= 0.0, "energies must be nonnegative");
  require(p.initial_battery <= p.battery_capacity, "initial battery exceeds capacity");
  require(p.slot_length > 0.0, "slot length must be positive");
  require(!p.power_grid.empty() && p.power_grid.front() == 0.0, "power grid must start at 0");
  require(std::is_sorted(p.power_grid.begin(), p.power_grid.end()) &&
              std::adjacent_find(p.power_grid.begin(), p.power_grid.end()) == p.power_grid.end(),
          "power grid must be strictly ascending");
  const double p_max = max_power(p, markov);
  require(std::abs(p.power_grid.back() - p_max) <= 1e-9 * std::max(p_max, 1e-30),
          "largest grid power must equal P_int / h_best");
}

double max_power(const SystemParams& params, const MarkovSpec& markov) {
  return params.interference_cap / h_best(markov);
}

std::vector<double> make_power_grid(double p_max, double step) {
  if (p_max == 0.0) return {0.0};
  require(step > 0.0, "power step must be positive");
  const double n = std::round(p_max / step);
  require(n >= 1.0 && std::abs(n * step - p_max) <= 1e-9 * p_max, "P_max must be a multiple of the power step");
  std::vector<double> grid;
  for (std::size_t k = 0; k + 1 <= static_cast<std::size_t>(n); ++k) grid.push_back(step * static_cast<double>(k));
  grid.push_back(p_max);
  return grid;
}

double effective_gain(double h_ss, double h_ps, const SystemParams& params) {
  return h_ss / (params.noise_power + h_ps * params.primary_power);
}

double instantaneous_rate(double h_ss, double h_ps, double p_s, const SystemParams& params) {
  return std::log2(1.0 + h_ss * p_s / (params.noise_power + h_ps * params.primary_power));
}

double battery_step(double battery, const Action& action, double harvestable, const SystemParams& params) {
  if (action.harvest) {
    return std::min(battery + params.efficiency * harvestable, params.battery_capacity);
  }
  const double spent = action.power * params.slot_length;
  if (spent > battery * (1.0 + 1e-12) + 1e-18) {
    std::ostringstream os;
    os << "transmit energy " << spent << " J exceeds battery " << battery << " J";
    throw InfeasibleAction(os.str());
  }
  return std::clamp(battery - spent, 0.0, params.battery_capacity);
}

double feasible_grid_power(const SystemParams& params, double requested, double battery) {
  const double budget = battery * (1.0 + 1e-12) + 1e-18;
  double best = 0.0;
  for (double p : params.power_grid) {
    if (p <= requested && p * params.slot_length <= budget) best = p;
  }
  return best;
}

std::size_t action_count(const SystemParams& params) { return params.power_grid.size(); }

Action action_of(const SystemParams& params, std::uint32_t a) {
  if (a == kHarvestAction) return {true, 0.0};
  return {false, params.power_grid.at(a)};
}

// ---------------------------------------------------------------------------
// StateSpace

StateSpace::StateSpace(const SystemParams& params, const MarkovSpec& markov, double battery_step)
    : n_channel_(markov.channel_values.size()), n_energy_(markov.energy_values.size()), step_(battery_step) {
  require(n_channel_ > 0 && n_energy_ > 0, "empty value sets");
  if (params.battery_capacity == 0.0) {
    n_battery_ = 1;
    if (!(step_ > 0.0)) step_ = 1.0;
    return;
  }
  require(battery_step > 0.0, "battery grid step must be positive");
  const double n = std::round(params.battery_capacity / battery_step);
  require(n >= 1.0 && std::abs(n * battery_step - params.battery_capacity) <= kGridTol,
          "battery grid step does not divide B_max");
  n_battery_ = static_cast<std::size_t>(n) + 1;
}

std::size_t StateSpace::exogenous_index(std::uint32_t h_ps, std::uint32_t h_ss, std::uint32_t e) const {
  return (static_cast<std::size_t>(h_ps) * n_channel_ + h_ss) * n_energy_ + e;
}

std::size_t StateSpace::index(const SystemState& s) const {
  if (s.h_ps_idx >= n_channel_ || s.h_ss_idx >= n_channel_ || s.e_idx >= n_energy_ || s.b_idx >= n_battery_) {
    throw std::out_of_range("state component out of range");
  }
  return index(exogenous_index(s.h_ps_idx, s.h_ss_idx, s.e_idx), s.b_idx);
}

SystemState StateSpace::state(std::size_t index) const {
  if (index >= size()) throw std::out_of_range("state index out of range");
  SystemState s;
  s.b_idx = static_cast<std::uint32_t>(index % n_battery_);
  index /= n_battery_;
  s.e_idx = static_cast<std::uint32_t>(index % n_energy_);
  index /= n_energy_;
  s.h_ss_idx = static_cast<std::uint32_t>(index % n_channel_);
  s.h_ps_idx = static_cast<std::uint32_t>(index / n_channel_);
  return s;
}

std::vector<SystemState> StateSpace::states() const {
  std::vector<SystemState> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(state(i));
  return out;
}

std::uint32_t StateSpace::battery_floor(double battery) const {
  if (battery <= 0.0) return 0;
  const double level = std::floor(battery / step_ + 1e-9);
  return static_cast<std::uint32_t>(std::min(level, static_cast<double>(n_battery_ - 1)));
}

StateSpace enumerate_states(const SystemParams& params, const MarkovSpec& markov, double battery_step) {
  return StateSpace(params, markov, battery_step);
}

// ---------------------------------------------------------------------------
// MdpTensors

MdpTensors::MdpTensors(std::size_t n_states, std::size_t n_actions,
                       const std::vector<std::vector<Transition>>& rows, std::vector<double> rewards)
    : n_states_(n_states), n_actions_(n_actions), rewards_(std::move(rewards)) {
  require(rows.size() == n_states * n_actions, "transition rows do not match state/action counts");
  require(rewards_.size() == n_states * n_actions, "reward table does not match state/action counts");
  offsets_.reserve(rows.size() + 1);
  offsets_.push_back(0);
  for (const auto& row : rows) {
    for (const auto& t : row) {
      require(t.next < n_states, "transition target out of range");
      entries_.push_back(t);
    }
    offsets_.push_back(entries_.size());
  }
}

MdpTensors MdpTensors::from_dense(std::size_t n_states, std::size_t n_actions,
                                  std::span<const double> transition, std::span<const double> reward) {
  require(transition.size() == n_states * n_states * n_actions, "dense transition size mismatch");
  std::vector<std::vector<Transition>> rows(n_states * n_actions);
  for (std::size_t s = 0; s < n_states; ++s) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      for (std::size_t k = 0; k < n_states; ++k) {
        const double p = transition[(s * n_states + k) * n_actions + a];
        if (p != 0.0) rows[s * n_actions + a].push_back({static_cast<std::uint32_t>(k), p});
      }
    }
  }
  return MdpTensors(n_states, n_actions, rows, std::vector<double>(reward.begin(), reward.end()));
}

double MdpTensors::probability(std::size_t s, std::size_t k, std::size_t a) const {
  double p = 0.0;
  for (const auto& t : transitions(s, a)) {
    if (t.next == k) p += t.prob;
  }
  return p;
}

double MdpTensors::max_reward() const {
  return rewards_.empty() ? 0.0 : *std::max_element(rewards_.begin(), rewards_.end());
}

double MdpTensors::stochasticity_error() const {
  double worst = 0.0;
  for (std::size_t row = 0; row + 1 < offsets_.size(); ++row) {
    double sum = 0.0;
    for (std::size_t i = offsets_[row]; i < offsets_[row + 1]; ++i) sum += entries_[i].prob;
    worst = std::max(worst, std::abs(1.0 - sum));
  }
  return worst;
}

double exogenous_probability(const MarkovSpec& markov, const StateSpace& space, std::size_t from,
                             std::size_t to) {
  const std::size_t me = space.energy_levels();
  const std::size_t mc = space.channel_levels();
  const std::size_t e0 = from % me, e1 = to % me;
  const std::size_t hss0 = (from / me) % mc, hss1 = (to / me) % mc;
  const std::size_t hps0 = from / me / mc, hps1 = to / me / mc;
  return markov.channel_tm[hps0][hps1] * markov.channel_tm[hss0][hss1] * markov.energy_tm[e0][e1];
}

MdpTensors build_mdp(const SystemParams& params, const MarkovSpec& markov, const StateSpace& space) {
  const std::size_t n_states = space.size();
  const std::size_t n_actions = action_count(params);
  const std::size_t n_exo = space.exogenous_count();

  // Exogenous successor lists are shared by every battery level and action.
  std::vector<std::vector<std::pair<std::size_t, double>>> exo_next(n_exo);
  for (std::size_t x = 0; x < n_exo; ++x) {
    for (std::size_t y = 0; y < n_exo; ++y) {
      const double p = exogenous_probability(markov, space, x, y);
      if (p > 0.0) exo_next[x].emplace_back(y, p);
    }
  }

  std::vector<std::vector<Transition>> rows(n_states * n_actions);
  std::vector<double> rewards(n_states * n_actions, 0.0);
  for (std::size_t s = 0; s < n_states; ++s) {
    const SystemState st = space.state(s);
    const std::size_t x = s / space.battery_levels();
    const double battery = space.battery_value(st.b_idx);
    const double h_ss = markov.channel_values[st.h_ss_idx];
    const double h_ps = markov.channel_values[st.h_ps_idx];
    const double e_h = markov.energy_values[st.e_idx];
    for (std::size_t a = 0; a < n_actions; ++a) {
      double next_battery;
      if (a == kHarvestAction) {
        next_battery = battery_step(battery, {true, 0.0}, e_h, params);
      } else {
        const double p = feasible_grid_power(params, params.power_grid[a], battery);
        next_battery = battery_step(battery, {false, p}, e_h, params);
        rewards[s * n_actions + a] = instantaneous_rate(h_ss, h_ps, p, params);
      }
      const std::uint32_t nb = space.battery_floor(next_battery);
      auto& row = rows[s * n_actions + a];
      row.reserve(exo_next[x].size());
      for (const auto& [y, p] : exo_next[x]) {
        row.push_back({static_cast<std::uint32_t>(space.index(y, nb)), p});
      }
    }
  }
  return MdpTensors(n_states, n_actions, rows, std::move(rewards));
}

// ---------------------------------------------------------------------------
// Trajectories

Trajectory sample_trajectory(const MarkovSpec& markov, std::size_t n_slots, std::uint64_t seed,
                             const InitialDistribution& initial) {
  require(n_slots >= 1, "trajectory needs at least one slot");
  Rng rng(seed);
  const std::size_t mc = markov.channel_values.size();
  const std::size_t me = markov.energy_values.size();
  std::uint32_t hps, hss, e;
  if (initial.fixed) {
    hps = initial.fixed->h_ps_idx;
    hss = initial.fixed->h_ss_idx;
    e = initial.fixed->e_idx;
    require(hps < mc && hss < mc && e < me, "initial state out of range");
  } else {
    hps = static_cast<std::uint32_t>(uniform_index(mc, rng));
    hss = static_cast<std::uint32_t>(uniform_index(mc, rng));
    e = static_cast<std::uint32_t>(uniform_index(me, rng));
  }
  Trajectory t;
  for (std::size_t i = 0; i < n_slots; ++i) {
    if (i > 0) {
      hps = static_cast<std::uint32_t>(sample_categorical(markov.channel_tm[hps], rng));
      hss = static_cast<std::uint32_t>(sample_categorical(markov.channel_tm[hss], rng));
      e = static_cast<std::uint32_t>(sample_categorical(markov.energy_tm[e], rng));
    }
    t.h_ps_idx.push_back(hps);
    t.h_ss_idx.push_back(hss);
    t.e_idx.push_back(e);
    t.h_ps.push_back(markov.channel_values[hps]);
    t.h_ss.push_back(markov.channel_values[hss]);
    t.e_h.push_back(markov.energy_values[e]);
  }
  return t;
}

namespace {

std::uint32_t match_value(const std::vector<double>& set, double v, const char* name) {
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (std::abs(set[i] - v) <= 1e-9 * std::abs(set[i])) return static_cast<std::uint32_t>(i);
  }
  std::ostringstream os;
  os << name << " value " << v << " is not in the configured value set";
  throw std::invalid_argument(os.str());
}

}  // namespace

Trajectory trajectory_from_values(const MarkovSpec& markov, std::vector<double> h_ss,
                                  std::vector<double> h_ps, std::vector<double> e_h) {
  require(h_ss.size() == h_ps.size() && h_ss.size() == e_h.size(), "trajectory columns differ in length");
  Trajectory t;
  for (std::size_t i = 0; i < h_ss.size(); ++i) {
    t.h_ss_idx.push_back(match_value(markov.channel_values, h_ss[i], "h_ss"));
    t.h_ps_idx.push_back(match_value(markov.channel_values, h_ps[i], "h_ps"));
    t.e_idx.push_back(match_value(markov.energy_values, e_h[i], "e_h"));
  }
  t.h_ss = std::move(h_ss);
  t.h_ps = std::move(h_ps);
  t.e_h = std::move(e_h);
  return t;
}

// ---------------------------------------------------------------------------
// Policy replay and Monte-Carlo evaluation

InvariantCounters& InvariantCounters::operator+=(const InvariantCounters& o) {
  slots += o.slots;
  battery_violations += o.battery_violations;
  power_violations += o.power_violations;
  interference_violations += o.interference_violations;
  neutrality_violations += o.neutrality_violations;
  return *this;
}

ReplayResult replay_policy(const Policy& policy, const StateSpace& space, const SystemParams& params,
                           const MarkovSpec& markov, const Trajectory& trajectory) {
  require(policy.size() == space.size(), "policy does not cover the state space");
  const double p_max = params.power_grid.back();
  const double hb = h_best(markov);
  ReplayResult out;
  out.powers.reserve(trajectory.size());
  double battery = params.initial_battery;
  double consumed = 0.0;
  double harvested = 0.0;
  double discount = 1.0;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    discount *= params.gamma;
    const SystemState st{trajectory.h_ps_idx[i], trajectory.h_ss_idx[i], trajectory.e_idx[i],
                         space.battery_floor(battery)};
    const std::uint32_t a = policy[space.index(st)];
    double power = 0.0;
    if (a == kHarvestAction) {
      ++out.harvest_slots;
      harvested += trajectory.e_h[i];
      battery = battery_step(battery, {true, 0.0}, trajectory.e_h[i], params);
    } else {
      ++out.transmit_slots;
      power = feasible_grid_power(params, params.power_grid[a], battery);
      battery = battery_step(battery, {false, power}, trajectory.e_h[i], params);
      consumed += power * params.slot_length;
      out.throughput += discount * instantaneous_rate(trajectory.h_ss[i], trajectory.h_ps[i], power, params);
    }
    out.powers.push_back(power);

    auto& inv = out.invariants;
    ++inv.slots;
    if (battery < 0.0 || battery > params.battery_capacity) ++inv.battery_violations;
    if (power > p_max * (1.0 + 1e-12)) ++inv.power_violations;
    if (hb * power > params.interference_cap * (1.0 + 1e-12)) ++inv.interference_violations;
    if (consumed > params.initial_battery + params.efficiency * harvested + 1e-15) ++inv.neutrality_violations;
  }
  return out;
}

SimulationResult simulate_policy(const Policy& policy, const StateSpace& space, const SystemParams& params,
                                 const MarkovSpec& markov, std::size_t n_slots, std::size_t episodes,
                                 std::uint64_t seed, bool parallel) {
  require(episodes >= 1, "need at least one episode");
  std::vector<ReplayResult> results(episodes);
  const auto n = static_cast<std::int64_t>(episodes);
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (std::int64_t ep = 0; ep < n; ++ep) {
    const Trajectory t = sample_trajectory(markov, n_slots, derive_seed(seed, static_cast<std::uint64_t>(ep)));
    results[static_cast<std::size_t>(ep)] = replay_policy(policy, space, params, markov, t);
    results[static_cast<std::size_t>(ep)].powers.clear();
  }

  SimulationResult out;
  out.episodes = episodes;
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& r : results) {
    sum += r.throughput;
    out.mean_transmit_slots += static_cast<double>(r.transmit_slots);
    out.mean_harvest_slots += static_cast<double>(r.harvest_slots);
    out.invariants += r.invariants;
  }
  const double count = static_cast<double>(episodes);
  out.mean = sum / count;
  for (const auto& r : results) sum_sq += (r.throughput - out.mean) * (r.throughput - out.mean);
  out.std_error = episodes > 1 ? std::sqrt(sum_sq / (count - 1.0) / count) : 0.0;
  out.mean_transmit_slots /= count;
  out.mean_harvest_slots /= count;
  return out;
}

}  // namespace ehcrn

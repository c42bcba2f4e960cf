#include "ehcrn/harness.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <ostream>
#include <sstream>

#include "ehcrn/dp.hpp"
#include "ehcrn/io.hpp"
#include "ehcrn/myopic.hpp"
#include "ehcrn/offline.hpp"
#include "ehcrn/rl.hpp"

namespace ehcrn {

namespace {

// Independent streams derived from a trajectory seed.
constexpr std::uint64_t kGbdStream = 1;
constexpr std::uint64_t kLearnerStream = 2;

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  double transmit = 0.0;
  double harvest = 0.0;
  std::size_t n = 0;
  std::size_t failures = 0;

  void add(const PolicyOutcome& o) {
    if (!o.ok || o.solver_error) ++failures;
    if (!o.ok) return;
    sum += o.throughput;
    sum_sq += o.throughput * o.throughput;
    transmit += o.transmit_slots;
    harvest += o.harvest_slots;
    ++n;
  }

  ReportRow row(const std::string& policy) const {
    ReportRow r;
    r.policy = policy;
    r.samples = n;
    r.failures = failures;
    if (n == 0) return r;
    const double dn = static_cast<double>(n);
    r.mean = sum / dn;
    r.mean_transmit_slots = transmit / dn;
    r.mean_harvest_slots = harvest / dn;
    if (n > 1) {
      const double var = std::max(0.0, (sum_sq - dn * r.mean * r.mean) / (dn - 1.0));
      r.std_error = std::sqrt(var / dn);
    }
    return r;
  }
};

PolicyOutcome from_replay(const ReplayResult& r) {
  return {true, false, r.throughput, static_cast<double>(r.transmit_slots), static_cast<double>(r.harvest_slots)};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs `body(k)` for every realization in parallel and returns the results in index order.
template <typename T, typename F>
std::vector<T> fan_out(std::size_t count, F body) {
  std::vector<T> out(count);
  std::exception_ptr error;
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t k = 0; k < n; ++k) {
    try {
      out[static_cast<std::size_t>(k)] = body(static_cast<std::size_t>(k));
    } catch (...) {
#pragma omp critical(ehcrn_harness_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<double> sweep_points(const ExperimentConfig& config) {
  if (config.sweep_variable.empty()) return {0.0};
  return config.sweep_values;
}

void stamp(std::vector<ReportRow>& rows, const ExperimentConfig& point, const std::string& variable, double value,
           double wall) {
  const std::string hash = config_hash(point);
  for (auto& r : rows) {
    r.sweep_variable = variable;
    r.sweep_value = value;
    r.config_hash = hash;
    r.wall_seconds = wall;
  }
}

}  // namespace

const ReportRow& Report::find(const std::string& policy, double sweep_value) const {
  for (const auto& r : rows) {
    if (r.policy == policy && r.sweep_value == sweep_value) return r;
  }
  throw std::out_of_range("no report row for policy '" + policy + "'");
}

ExperimentConfig at_sweep_point(const ExperimentConfig& config, const std::string& variable, double value) {
  ExperimentConfig c = config;
  c.sweep_variable.clear();
  c.sweep_values.clear();
  if (variable.empty()) return c;
  if (variable == "epsilon") {
    c.learning.epsilon = value;
  } else if (variable == "n_iterations") {
    c.learning.n_iterations = static_cast<std::uint64_t>(value);
  } else if (variable == "P_p") {
    c.params.primary_power = value;
  } else if (variable == "P_max") {
    set_max_power(c, value);
  } else if (variable == "B_max") {
    c.params.battery_capacity = value;
  } else {
    throw ConfigError("unknown sweep variable '" + variable + "'");
  }
  validate(c);
  return c;
}

std::uint64_t trajectory_seed(const ExperimentConfig& config, std::size_t k) {
  return derive_seed(config.seed, k);
}

Report run_comparison(const ExperimentConfig& config) {
  validate(config);
  Report report;
  for (double value : sweep_points(config)) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig c = at_sweep_point(config, config.sweep_variable, value);
    const StateSpace space(c.params, c.markov, c.battery_step);
    const MdpTensors mdp = build_mdp(c.params, c.markov, space);
    const Policy online = policy_iteration(mdp, c.params.gamma, c.delta).policy;

    struct Outcomes {
      PolicyOutcome offline, online, learned, myopic;
    };
    const auto results = fan_out<Outcomes>(c.episodes, [&](std::size_t k) {
      Outcomes o;
      const std::uint64_t seed = trajectory_seed(c, k);
      const Trajectory traj = sample_trajectory(c.markov, c.n_slots, seed);

      GbdOptions opt;
      opt.gap_tolerance = c.gap_tolerance;
      opt.max_iterations = c.gbd_max_iterations;
      opt.seed = derive_seed(seed, kGbdStream);
      opt.parallel = false;
      const auto summarize = [&](const GbdResult& g, bool limited) {
        std::size_t harvest = 0;
        for (auto bit : g.i_h) harvest += bit;
        return PolicyOutcome{true, limited, g.value, static_cast<double>(traj.size() - harvest),
                             static_cast<double>(harvest)};
      };
      try {
        o.offline = summarize(gbd({traj, c.params}, opt), false);
      } catch (const GbdIterationLimit& e) {
        o.offline = summarize(e.incumbent(), true);
      }

      o.online = from_replay(replay_policy(online, space, c.params, c.markov, traj));

      EhCrnEnvironment env(c.params, c.markov, c.battery_step);
      LearningConfig lc = c.learning;
      lc.seed = derive_seed(seed, kLearnerStream);
      lc.log_every = 0;
      const LearningResult learned = q_learning(env, lc, c.params.gamma);
      o.learned = from_replay(replay_policy(learned.policy, space, c.params, c.markov, traj));

      const MyopicResult m = myopic_run(traj, c.params);
      double tx = 0.0;
      for (const auto& s : m.slots) tx += s.alpha;
      o.myopic = {true, false, m.value, tx, static_cast<double>(traj.size()) - tx};
      return o;
    });

    Moments off, on, ql, my;
    for (const auto& o : results) {
      off.add(o.offline);
      on.add(o.online);
      ql.add(o.learned);
      my.add(o.myopic);
    }
    std::vector<ReportRow> rows = {off.row(kOfflinePolicy), on.row(kOnlinePolicy), ql.row(kLearnedPolicy),
                                   my.row(kMyopicPolicy)};
    stamp(rows, c, config.sweep_variable, value, seconds_since(t0));
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  return report;
}

Report run_epsilon_sweep(const ExperimentConfig& config) {
  validate(config);
  std::vector<double> grid;
  if (config.sweep_variable == "epsilon") {
    grid = config.sweep_values;
  } else {
    for (int k = 1; k <= 10; ++k) grid.push_back(0.01 * k);
  }
  ExperimentConfig base = config;
  base.sweep_variable.clear();
  base.sweep_values.clear();
  const StateSpace space(base.params, base.markov, base.battery_step);

  Report report;
  for (double eps : grid) {
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("epsilon sweep values must lie in (0, 1)");
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig c = base;
    c.learning.epsilon = eps;
    c.learning.n_iterations = c.epsilon_sweep_iterations;
    const auto results = fan_out<PolicyOutcome>(c.episodes, [&](std::size_t k) {
      const std::uint64_t seed = trajectory_seed(c, k);
      const Trajectory traj = sample_trajectory(c.markov, c.n_slots, seed);
      EhCrnEnvironment env(c.params, c.markov, c.battery_step);
      LearningConfig lc = c.learning;
      lc.seed = derive_seed(seed, kLearnerStream);
      const LearningResult learned = q_learning(env, lc, c.params.gamma);
      return from_replay(replay_policy(learned.policy, space, c.params, c.markov, traj));
    });
    Moments m;
    for (const auto& o : results) m.add(o);
    std::vector<ReportRow> rows = {m.row(kLearnedPolicy)};
    stamp(rows, c, "epsilon", eps, seconds_since(t0));
    report.rows.push_back(rows.front());
  }
  return report;
}

Report run_capacity_sweeps(const ExperimentConfig& config) {
  if (config.sweep_variable != "P_max" && config.sweep_variable != "B_max") {
    throw ConfigError("capacity sweeps need sweep variable P_max or B_max");
  }
  return run_comparison(config);
}

Report run_sweep(const ExperimentConfig& config) {
  if (config.sweep_variable == "epsilon") return run_epsilon_sweep(config);
  if (config.sweep_variable == "P_max" || config.sweep_variable == "B_max") return run_capacity_sweeps(config);
  return run_comparison(config);
}

void write_report_csv(std::ostream& out, const Report& report, const ExperimentConfig& config,
                      bool include_wall_time) {
  std::istringstream lines(serialize_config(config));
  for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
  out << "sweep_variable,sweep_value,policy,mean,std_error,transmit_slots,harvest_slots,n,failures,config_hash";
  if (include_wall_time) out << ",wall_seconds";
  out << '\n';
  for (const auto& r : report.rows) {
    out << r.sweep_variable << ',' << (r.sweep_variable.empty() ? "" : format_double(r.sweep_value)) << ','
        << r.policy << ',' << format_double(r.mean) << ',' << format_double(r.std_error) << ','
        << format_double(r.mean_transmit_slots) << ',' << format_double(r.mean_harvest_slots) << ',' << r.samples
        << ',' << r.failures << ',' << r.config_hash;
    if (include_wall_time) out << ',' << format_double(r.wall_seconds);
    out << '\n';
  }
}

}  // namespace ehcrn

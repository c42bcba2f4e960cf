// Command-line front end: simulate, online, qlearn, offline, myopic, sweep.
// Failures print one JSON object on stderr and exit nonzero.

#include <CLI11.hpp>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "ehcrn/config.hpp"
#include "ehcrn/dp.hpp"
#include "ehcrn/harness.hpp"
#include "ehcrn/io.hpp"
#include "ehcrn/myopic.hpp"
#include "ehcrn/offline.hpp"
#include "ehcrn/rl.hpp"

namespace {

using namespace ehcrn;

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2, kSolver = 3, kIo = 4 };

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  std::string sweep;
  std::string trajectory_path;
  std::string bounds_path;
  std::string qtable_path;
  std::optional<std::size_t> slots;
  std::uint64_t log_every = 10;
  std::size_t eval_episodes = 200;
  bool brute_force = false;
  bool wall_time = false;
};

int fail(ExitCode code, const std::string& kind, const std::string& message, nlohmann::json extra = {}) {
  nlohmann::json j = {{"error", kind}, {"message", message}};
  if (extra.is_object()) j.update(extra);
  std::cerr << j.dump() << '\n';
  return code;
}

ExperimentConfig load(const Options& o) {
  ExperimentConfig c = o.config_path.empty() ? default_config() : load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.slots) c.n_slots = *o.slots;
  if (!o.sweep.empty()) apply_sweep(c, o.sweep);
  validate(c);
  return c;
}

// Writes to --out, or stdout when no path is given.
void emit(const Options& o, const std::function<void(std::ostream&)>& write) {
  if (o.out_path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream f(o.out_path);
  if (!f) throw CsvError("cannot open output file '" + o.out_path + "'");
  write(f);
  if (!f) throw CsvError("failed writing '" + o.out_path + "'");
}

void emit_file(const std::string& path, const std::function<void(std::ostream&)>& write) {
  std::ofstream f(path);
  if (!f) throw CsvError("cannot open output file '" + path + "'");
  write(f);
}

Trajectory trajectory_for(const Options& o, const ExperimentConfig& c) {
  if (o.trajectory_path.empty()) return sample_trajectory(c.markov, c.n_slots, c.seed);
  std::ifstream f(o.trajectory_path);
  if (!f) throw CsvError("cannot open trajectory file '" + o.trajectory_path + "'");
  return read_trajectory_csv(f, c.markov);
}

int run_simulate(const Options& o) {
  const ExperimentConfig c = load(o);
  const Trajectory t = sample_trajectory(c.markov, c.n_slots, c.seed);
  emit(o, [&](std::ostream& out) { write_trajectory_csv(out, t); });
  return kOk;
}

int run_online(const Options& o) {
  const ExperimentConfig c = load(o);
  const StateSpace space(c.params, c.markov, c.battery_step);
  const MdpTensors mdp = build_mdp(c.params, c.markov, space);
  const PolicyIterationResult pi = policy_iteration(mdp, c.params.gamma, c.delta);
  emit(o, [&](std::ostream& out) { write_policy_csv(out, pi.policy, pi.values, space, c.params, c.markov); });
  const SimulationResult sim = simulate_policy(pi.policy, space, c.params, c.markov, c.n_slots, c.episodes, c.seed);
  std::clog << nlohmann::json{{"states", space.size()},
                              {"iterations", pi.iterations},
                              {"bellman_residual", bellman_residual(pi.values, mdp, c.params.gamma)},
                              {"throughput_mean", sim.mean},
                              {"throughput_std_error", sim.std_error}}
                   .dump()
            << '\n';
  return kOk;
}

int run_qlearn(const Options& o) {
  const ExperimentConfig c = load(o);
  EhCrnEnvironment env(c.params, c.markov, c.battery_step);
  LearningConfig lc = c.learning;
  lc.seed = c.seed;
  lc.log_every = o.log_every;
  const std::uint64_t eval_seed = derive_seed(c.seed, 0xE7A1);
  const PolicyEvaluator evaluator = [&](const Policy& p) {
    return simulate_policy(p, env.space(), c.params, c.markov, c.n_slots, o.eval_episodes, eval_seed).mean;
  };
  const LearningResult r = q_learning(env, lc, c.params.gamma, evaluator);
  emit(o, [&](std::ostream& out) { write_learning_curve_csv(out, r.log); });
  std::string qtable = o.qtable_path;
  if (qtable.empty() && !o.out_path.empty()) qtable = o.out_path + ".qtable.csv";
  if (!qtable.empty()) emit_file(qtable, [&](std::ostream& out) { write_q_table_csv(out, r.table); });
  return kOk;
}

int run_offline(const Options& o) {
  const ExperimentConfig c = load(o);
  const OfflineInstance inst{trajectory_for(o, c), c.params};
  HarvestVector i_h;
  std::vector<double> powers;
  std::vector<BoundRecord> history;
  double value = 0.0;
  if (o.brute_force) {
    const BruteForceResult b = brute_force_offline(inst);
    i_h = b.i_h;
    powers = b.powers;
    value = b.value;
  } else {
    GbdOptions opt;
    opt.gap_tolerance = c.gap_tolerance;
    opt.max_iterations = c.gbd_max_iterations;
    opt.seed = c.seed;
    const GbdResult g = gbd(inst, opt);
    i_h = g.i_h;
    powers = g.powers;
    history = g.history;
    value = g.value;
  }
  emit(o, [&](std::ostream& out) { write_solution_csv(out, inst, i_h, powers); });
  if (!o.bounds_path.empty()) emit_file(o.bounds_path, [&](std::ostream& out) { write_bounds_csv(out, history); });
  std::clog << nlohmann::json{{"value", value}, {"iterations", history.size()}}.dump() << '\n';
  return kOk;
}

int run_myopic(const Options& o) {
  const ExperimentConfig c = load(o);
  const MyopicResult r = myopic_run(trajectory_for(o, c), c.params);
  emit(o, [&](std::ostream& out) { write_myopic_csv(out, r); });
  std::clog << nlohmann::json{{"value", r.value}}.dump() << '\n';
  return kOk;
}

int run_sweep_command(const Options& o) {
  const ExperimentConfig c = load(o);
  const Report report = run_sweep(c);
  emit(o, [&](std::ostream& out) { write_report_csv(out, report, c, o.wall_time); });
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harvest-or-transmit scheduling for an energy-harvesting underlay cognitive radio link"};
  app.require_subcommand(1);
  Options o;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "key = value config file (SI units)")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "base RNG seed");
    sub->add_option("--out", o.out_path, "output CSV path (default: stdout)");
    sub->add_option("--sweep", o.sweep, "sweep specification var=v1,v2,...");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "sample an exogenous trajectory");
  common(simulate);
  simulate->add_option("--slots", o.slots, "trajectory length");

  CLI::App* online = app.add_subcommand("online", "policy iteration on the enumerated MDP");
  common(online);
  online->add_option("--slots", o.slots, "episode length for the throughput estimate");

  CLI::App* qlearn = app.add_subcommand("qlearn", "tabular Q-learning against the simulated link");
  common(qlearn);
  qlearn->add_option("--log-every", o.log_every, "iterations between learning-curve points");
  qlearn->add_option("--eval-episodes", o.eval_episodes, "episodes per learning-curve estimate");
  qlearn->add_option("--qtable", o.qtable_path, "Q-table CSV path (default: <out>.qtable.csv)");
  qlearn->add_option("--slots", o.slots, "episode length for the learning-curve estimate");

  CLI::App* offline = app.add_subcommand("offline", "offline schedule for a known trajectory");
  common(offline);
  offline->add_option("--trajectory", o.trajectory_path, "trajectory CSV (default: sampled from --seed)");
  offline->add_option("--bounds", o.bounds_path, "bound-history CSV path");
  offline->add_option("--slots", o.slots, "trajectory length when sampling");
  offline->add_flag("--brute-force", o.brute_force, "enumerate every harvest vector instead");

  CLI::App* myopic = app.add_subcommand("myopic", "per-slot time-sharing baseline");
  common(myopic);
  myopic->add_option("--trajectory", o.trajectory_path, "trajectory CSV (default: sampled from --seed)");
  myopic->add_option("--slots", o.slots, "trajectory length when sampling");

  CLI::App* sweep = app.add_subcommand("sweep", "seeded policy comparison over a swept parameter");
  common(sweep);
  sweep->add_flag("--wall-time", o.wall_time, "append a wall_seconds column (breaks byte-reproducibility)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  try {
    if (*simulate) return run_simulate(o);
    if (*online) return run_online(o);
    if (*qlearn) return run_qlearn(o);
    if (*offline) return run_offline(o);
    if (*myopic) return run_myopic(o);
    if (*sweep) return run_sweep_command(o);
  } catch (const GbdIterationLimit& e) {
    return fail(kSolver, "iteration_limit", e.what(),
                {{"gap", e.gap()}, {"incumbent_value", e.incumbent().value}, {"iterations", e.incumbent().iterations()}});
  } catch (const ProblemTooLarge& e) {
    return fail(kSolver, "problem_too_large", e.what());
  } catch (const ConfigError& e) {
    return fail(kUsage, "config", e.what());
  } catch (const CsvError& e) {
    return fail(kIo, "io", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kUsage, "invalid_argument", e.what());
  } catch (const std::exception& e) {
    return fail(kInternal, "internal", e.what());
  }
  return kInternal;
}

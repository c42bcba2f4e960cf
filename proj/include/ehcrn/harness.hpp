#pragma once

// Seeded experiment runner comparing the offline, online, learned and myopic
// policies over shared trajectories.

#include <iosfwd>
#include <string>
#include <vector>

#include "ehcrn/config.hpp"

namespace ehcrn {

inline constexpr const char* kOfflinePolicy = "offline";
inline constexpr const char* kOnlinePolicy = "online";
inline constexpr const char* kLearnedPolicy = "qlearning";
inline constexpr const char* kMyopicPolicy = "myopic";

struct ReportRow {
  std::string sweep_variable;  // empty for a single-point run
  double sweep_value = 0.0;
  std::string policy;
  double mean = 0.0;       // discounted throughput, bpcu
  double std_error = 0.0;
  double mean_transmit_slots = 0.0;
  double mean_harvest_slots = 0.0;
  std::size_t samples = 0;
  std::size_t failures = 0;  // seeds where the solver raised; see PolicyOutcome
  std::string config_hash;
  double wall_seconds = 0.0;
};

struct Report {
  std::vector<ReportRow> rows;

  /// First row matching (policy, sweep value); throws std::out_of_range if absent.
  const ReportRow& find(const std::string& policy, double sweep_value = 0.0) const;
};

/// Per-seed outcome of one policy; also used by tests.
struct PolicyOutcome {
  bool ok = true;            // false: no usable value, the seed is dropped
  bool solver_error = false; // counted as a failure; the value (an incumbent) is still averaged
  double throughput = 0.0;
  double transmit_slots = 0.0;
  double harvest_slots = 0.0;
};

/// Applies one sweep value to a copy of the config.
ExperimentConfig at_sweep_point(const ExperimentConfig& config, const std::string& variable, double value);

/// Seed of the trajectory used for realization k; shared across sweep points.
std::uint64_t trajectory_seed(const ExperimentConfig& config, std::size_t k);

/// All four policies over `episodes` seeded trajectories at every sweep point.
/// Solver failures are counted per row instead of aborting the sweep. A GBD run
/// that hits its iteration limit contributes its incumbent, a feasible schedule.
Report run_comparison(const ExperimentConfig& config);

/// Q-learning throughput per epsilon value at N_L = epsilon_sweep_iterations.
/// Uses config.sweep_values when sweeping epsilon, else the grid 0.01..0.10.
Report run_epsilon_sweep(const ExperimentConfig& config);

/// Comparison sweep over P_max or B_max.
Report run_capacity_sweeps(const ExperimentConfig& config);

/// Dispatches on config.sweep_variable.
Report run_sweep(const ExperimentConfig& config);

/// `sweep_variable,sweep_value,policy,mean,std_error,transmit_slots,harvest_slots,n,failures,config_hash`
/// plus `wall_seconds` when requested. Header comment lines record the config.
void write_report_csv(std::ostream& out, const Report& report, const ExperimentConfig& config,
                      bool include_wall_time = false);

}  // namespace ehcrn

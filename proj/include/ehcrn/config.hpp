#pragma once

// Experiment configuration and its key = value file format. Values are SI
// (W, J, s); `noise_power_dbm` is accepted and converted at parse time.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ehcrn/model.hpp"
#include "ehcrn/rl.hpp"

namespace ehcrn {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  SystemParams params;
  MarkovSpec markov;
  double battery_step = 0.2e-3;  // J
  double power_step = 0.2e-3;    // W, spacing of the transmit power grid
  std::size_t n_slots = 20;
  std::size_t episodes = 2000;   // seeded trajectories per sweep point
  std::uint64_t seed = 1;
  LearningConfig learning;       // epsilon, n_iterations (N_L), omega
  std::uint64_t epsilon_sweep_iterations = 40;
  double gap_tolerance = 1e-4;
  std::size_t gbd_max_iterations = 200;
  double delta = 1e-8;
  std::string sweep_variable;    // epsilon, n_iterations, P_p, P_max or B_max
  std::vector<double> sweep_values;
};

ExperimentConfig default_config();

/// Largest channel value, the worst-case PT-side gain.
double best_channel(const MarkovSpec& markov);

/// Sets P_int so that P_max = p_max and rebuilds the power grid.
void set_max_power(ExperimentConfig& config, double p_max);

/// Rebuilds the power grid from P_int, the channel set and power_step.
void refresh_power_grid(ExperimentConfig& config);

/// Applies a single `key = value` setting.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Parses a config file on top of default_config(); throws ConfigError with the line number.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Canonical text form; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const ExperimentConfig& config);

/// FNV-1a over the canonical text form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Parses `var=v1,v2,...`.
void apply_sweep(ExperimentConfig& config, const std::string& spec);

void validate(const ExperimentConfig& config);

double dbm_to_watts(double dbm);

}  // namespace ehcrn

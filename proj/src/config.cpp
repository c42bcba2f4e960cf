#include "ehcrn/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

namespace ehcrn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) throw ConfigError("not a number: '" + t + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("not a non-negative integer: '" + t + "'");
  }
  return v;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item));
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

// Rows separated by ';', entries by ','.
TransitionMatrix parse_matrix(const std::string& text) {
  TransitionMatrix out;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) out.push_back(parse_list(row));
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

std::string fmt_matrix(const TransitionMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.size(); ++i) out += (i ? ";" : "") + fmt_list(m[i]);
  return out;
}

const std::vector<std::string> kSweepVariables = {"epsilon", "n_iterations", "P_p", "P_max", "B_max"};

}  // namespace

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double best_channel(const MarkovSpec& markov) {
  if (markov.channel_values.empty()) throw ConfigError("channel_values is empty");
  return *std::max_element(markov.channel_values.begin(), markov.channel_values.end());
}

void refresh_power_grid(ExperimentConfig& config) {
  const double p_max = config.params.interference_cap / best_channel(config.markov);
  try {
    config.params.power_grid = make_power_grid(p_max, config.power_step);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void set_max_power(ExperimentConfig& config, double p_max) {
  if (!(p_max >= 0.0)) throw ConfigError("P_max must be non-negative");
  config.params.interference_cap = p_max * best_channel(config.markov);
  refresh_power_grid(config);
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.markov.channel_values = {0.2e-6, 0.4e-6};
  c.markov.energy_values = {0.2e-3, 0.4e-3};
  c.markov.channel_tm = {{0.5, 0.5}, {0.5, 0.5}};
  c.markov.energy_tm = {{0.5, 0.5}, {0.5, 0.5}};
  refresh_power_grid(c);
  return c;
}

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  auto& p = c.params;
  if (key == "primary_power") p.primary_power = parse_double(value);
  else if (key == "noise_power") p.noise_power = parse_double(value);
  else if (key == "noise_power_dbm") p.noise_power = dbm_to_watts(parse_double(value));
  else if (key == "interference_cap") p.interference_cap = parse_double(value);
  else if (key == "efficiency") p.efficiency = parse_double(value);
  else if (key == "initial_battery") p.initial_battery = parse_double(value);
  else if (key == "battery_capacity") p.battery_capacity = parse_double(value);
  else if (key == "gamma") p.gamma = parse_double(value);
  else if (key == "slot_length") p.slot_length = parse_double(value);
  else if (key == "channel_values") c.markov.channel_values = parse_list(value);
  else if (key == "energy_values") c.markov.energy_values = parse_list(value);
  else if (key == "channel_tm") c.markov.channel_tm = parse_matrix(value);
  else if (key == "energy_tm") c.markov.energy_tm = parse_matrix(value);
  else if (key == "battery_step") c.battery_step = parse_double(value);
  else if (key == "power_step") c.power_step = parse_double(value);
  else if (key == "n_slots") c.n_slots = parse_u64(value);
  else if (key == "episodes") c.episodes = parse_u64(value);
  else if (key == "seed") c.seed = parse_u64(value);
  else if (key == "epsilon") c.learning.epsilon = parse_double(value);
  else if (key == "n_iterations") c.learning.n_iterations = parse_u64(value);
  else if (key == "omega") c.learning.omega = parse_double(value);
  else if (key == "epsilon_sweep_iterations") c.epsilon_sweep_iterations = parse_u64(value);
  else if (key == "gap_tolerance") c.gap_tolerance = parse_double(value);
  else if (key == "gbd_max_iterations") c.gbd_max_iterations = parse_u64(value);
  else if (key == "delta") c.delta = parse_double(value);
  else if (key == "sweep") apply_sweep(c, value);
  else throw ConfigError("unknown key '" + key + "'");
}

void apply_sweep(ExperimentConfig& c, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw ConfigError("sweep must look like var=v1,v2,...");
  const std::string var = trim(spec.substr(0, eq));
  if (std::find(kSweepVariables.begin(), kSweepVariables.end(), var) == kSweepVariables.end()) {
    throw ConfigError("unknown sweep variable '" + var + "'");
  }
  c.sweep_variable = var;
  c.sweep_values = parse_list(spec.substr(eq + 1));
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c = default_config();
  std::string line;
  std::size_t line_no = 0;
  bool grid_inputs_changed = false;
  std::optional<double> p_max;  // applied once the channel set is final
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    try {
      if (key == "P_max") {
        p_max = parse_double(line.substr(eq + 1));
      } else {
        apply_setting(c, key, line.substr(eq + 1));
      }
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
    grid_inputs_changed |= key == "interference_cap" || key == "channel_values" || key == "power_step";
  }
  if (p_max) {
    set_max_power(c, *p_max);
  } else if (grid_inputs_changed) {
    refresh_power_grid(c);
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  ExperimentConfig c = parse_config(in);
  validate(c);
  return c;
}

std::string serialize_config(const ExperimentConfig& c) {
  const auto& p = c.params;
  std::ostringstream out;
  out << "primary_power = " << fmt(p.primary_power) << '\n'
      << "noise_power = " << fmt(p.noise_power) << '\n'
      << "interference_cap = " << fmt(p.interference_cap) << '\n'
      << "efficiency = " << fmt(p.efficiency) << '\n'
      << "initial_battery = " << fmt(p.initial_battery) << '\n'
      << "battery_capacity = " << fmt(p.battery_capacity) << '\n'
      << "gamma = " << fmt(p.gamma) << '\n'
      << "slot_length = " << fmt(p.slot_length) << '\n'
      << "channel_values = " << fmt_list(c.markov.channel_values) << '\n'
      << "energy_values = " << fmt_list(c.markov.energy_values) << '\n'
      << "channel_tm = " << fmt_matrix(c.markov.channel_tm) << '\n'
      << "energy_tm = " << fmt_matrix(c.markov.energy_tm) << '\n'
      << "battery_step = " << fmt(c.battery_step) << '\n'
      << "power_step = " << fmt(c.power_step) << '\n'
      << "n_slots = " << c.n_slots << '\n'
      << "episodes = " << c.episodes << '\n'
      << "seed = " << c.seed << '\n'
      << "epsilon = " << fmt(c.learning.epsilon) << '\n'
      << "n_iterations = " << c.learning.n_iterations << '\n'
      << "omega = " << fmt(c.learning.omega) << '\n'
      << "epsilon_sweep_iterations = " << c.epsilon_sweep_iterations << '\n'
      << "gap_tolerance = " << fmt(c.gap_tolerance) << '\n'
      << "gbd_max_iterations = " << c.gbd_max_iterations << '\n'
      << "delta = " << fmt(c.delta) << '\n';
  if (!c.sweep_variable.empty()) out << "sweep = " << c.sweep_variable << '=' << fmt_list(c.sweep_values) << '\n';
  return out.str();
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void validate(const ExperimentConfig& c) {
  try {
    validate(c.params, c.markov);
    StateSpace(c.params, c.markov, c.battery_step);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.episodes == 0) throw ConfigError("episodes must be at least 1");
  if (c.n_slots == 0) throw ConfigError("n_slots must be at least 1");
  if (!(c.learning.epsilon >= 0.0 && c.learning.epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  if (!(c.learning.omega > 0.5 && c.learning.omega <= 1.0)) throw ConfigError("omega must lie in (0.5, 1]");
  if (!(c.gap_tolerance > 0.0)) throw ConfigError("gap_tolerance must be positive");
  if (!(c.delta > 0.0)) throw ConfigError("delta must be positive");
  for (double v : c.sweep_values) {
    const auto& var = c.sweep_variable;
    const bool ok = var == "epsilon" ? (v > 0.0 && v < 1.0)
                    : var == "n_iterations" ? (v >= 0.0 && v == std::floor(v))
                                            : v >= 0.0;
    if (!ok) throw ConfigError("sweep value " + fmt(v) + " out of range for " + var);
  }
}

}  // namespace ehcrn

#include "ehcrn/io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace ehcrn {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
  std::string t = cell;
  while (!t.empty() && (t.back() == '\r' || t.back() == ' ')) t.pop_back();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
    throw CsvError("line " + std::to_string(line_no) + ": not a number '" + cell + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  out << "slot,h_ss,h_ps,e_h\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << i + 1 << ',' << format_double(t.h_ss[i]) << ',' << format_double(t.h_ps[i]) << ','
        << format_double(t.e_h[i]) << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& in, const MarkovSpec& markov) {
  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty trajectory file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "slot,h_ss,h_ps,e_h") throw CsvError("unexpected trajectory header '" + line + "'");
  std::vector<double> h_ss, h_ps, e_h;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != 4) throw CsvError("line " + std::to_string(line_no) + ": expected 4 columns");
    if (parse_cell(cells[0], line_no) != static_cast<double>(h_ss.size() + 1)) {
      throw CsvError("line " + std::to_string(line_no) + ": slots must be numbered 1, 2, ...");
    }
    h_ss.push_back(parse_cell(cells[1], line_no));
    h_ps.push_back(parse_cell(cells[2], line_no));
    e_h.push_back(parse_cell(cells[3], line_no));
  }
  try {
    return trajectory_from_values(markov, std::move(h_ss), std::move(h_ps), std::move(e_h));
  } catch (const std::invalid_argument& e) {
    throw CsvError(e.what());
  }
}

void write_policy_csv(std::ostream& out, const Policy& policy, const ValueTable& values, const StateSpace& space,
                      const SystemParams& params, const MarkovSpec& markov) {
  out << "state_index,h_ps,h_ss,e_h,b,action,harvest,power,value\n";
  for (std::size_t s = 0; s < space.size(); ++s) {
    const SystemState st = space.state(s);
    const double battery = space.battery_value(st.b_idx);
    const std::uint32_t a = policy[s];
    const bool harvest = a == kHarvestAction;
    const double power = harvest ? 0.0 : feasible_grid_power(params, params.power_grid.at(a), battery);
    out << s << ',' << format_double(markov.channel_values[st.h_ps_idx]) << ','
        << format_double(markov.channel_values[st.h_ss_idx]) << ',' << format_double(markov.energy_values[st.e_idx])
        << ',' << format_double(battery) << ',' << a << ',' << (harvest ? 1 : 0) << ',' << format_double(power) << ','
        << format_double(values.empty() ? 0.0 : values[s]) << '\n';
  }
}

void write_learning_curve_csv(std::ostream& out, const std::vector<LearningPoint>& log) {
  out << "iteration,epsilon,throughput_estimate\n";
  for (const auto& p : log) {
    out << p.iteration << ',' << format_double(p.epsilon) << ',' << format_double(p.throughput) << '\n';
  }
}

void write_q_table_csv(std::ostream& out, const QTable& table) {
  out << "state_index,action,q,visits\n";
  for (std::size_t s = 0; s < table.n_states; ++s) {
    for (std::size_t a = 0; a < table.n_actions; ++a) {
      out << s << ',' << a << ',' << format_double(table.at(s, a)) << ',' << table.visit_count(s, a) << '\n';
    }
  }
}

void write_solution_csv(std::ostream& out, const OfflineInstance& instance, const HarvestVector& i_h,
                        const std::vector<double>& powers) {
  const std::vector<double> rates = slot_rates(instance, powers);
  out << "slot,i_h,power_w,rate_bpcu\n";
  for (std::size_t i = 0; i < powers.size(); ++i) {
    out << i + 1 << ',' << static_cast<int>(i_h[i]) << ',' << format_double(powers[i]) << ','
        << format_double(rates[i]) << '\n';
  }
}

void write_myopic_csv(std::ostream& out, const MyopicResult& result) {
  out << "slot,i_h,power_w,rate_bpcu\n";
  for (std::size_t i = 0; i < result.slots.size(); ++i) {
    out << i + 1 << ',' << kTimeSharedSlot << ',' << format_double(result.slots[i].power) << ','
        << format_double(result.slots[i].rate) << '\n';
  }
}

void write_bounds_csv(std::ostream& out, const std::vector<BoundRecord>& history) {
  out << "iter,lower,upper\n";
  for (const auto& r : history) {
    out << r.iteration << ',' << format_double(r.lower) << ',' << format_double(r.upper) << '\n';
  }
}

}  // namespace ehcrn

#pragma once

// CSV import/export of trajectories, policies, learning curves, offline
// schedules and bound histories.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ehcrn/dp.hpp"
#include "ehcrn/myopic.hpp"
#include "ehcrn/offline.hpp"
#include "ehcrn/rl.hpp"

namespace ehcrn {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form.
std::string format_double(double v);

/// `slot,h_ss,h_ps,e_h`, slot from 1.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);
Trajectory read_trajectory_csv(std::istream& in, const MarkovSpec& markov);

/// `state_index,h_ps,h_ss,e_h,b,action,harvest,power,value`.
void write_policy_csv(std::ostream& out, const Policy& policy, const ValueTable& values, const StateSpace& space,
                      const SystemParams& params, const MarkovSpec& markov);

/// `iteration,epsilon,throughput_estimate`.
void write_learning_curve_csv(std::ostream& out, const std::vector<LearningPoint>& log);

/// `state_index,action,q,visits`.
void write_q_table_csv(std::ostream& out, const QTable& table);

/// `slot,i_h,power_w,rate_bpcu`.
void write_solution_csv(std::ostream& out, const OfflineInstance& instance, const HarvestVector& i_h,
                        const std::vector<double>& powers);

/// i_h column value marking a time-shared slot in myopic schedules.
inline constexpr int kTimeSharedSlot = -1;

/// Solution format with the time-shared sentinel in the i_h column.
void write_myopic_csv(std::ostream& out, const MyopicResult& result);

/// `iter,lower,upper`.
void write_bounds_csv(std::ostream& out, const std::vector<BoundRecord>& history);

}  // namespace ehcrn

#pragma once

// Per-slot time-sharing baseline: a fraction (1 - alpha) of each slot harvests,
// the remaining alpha transmits everything harvested in that slot. Nothing is
// carried over in the battery, so slots decouple.

#include <vector>

#include "ehcrn/model.hpp"

namespace ehcrn {

struct MyopicSlot {
  double alpha = 1.0;
  double power = 0.0;  // (1 - alpha) / alpha * eta * E_H, W
  double rate = 0.0;   // alpha * log2(1 + power * gain), bpcu
};

/// alpha * log2(1 + (1 - alpha) / alpha * c); the limit 0 at alpha = 0.
double myopic_objective(double alpha, double c);

/// Smallest alpha keeping the implied power at or below P_max.
double myopic_alpha_min(double e_h, const SystemParams& params);

/// Golden-section maximizer over [max(alpha_min, 1e-9), 1]; 1 when e_h = 0.
double myopic_alpha(double h_ss, double h_ps, double e_h, const SystemParams& params, double tol = 1e-10);

MyopicSlot myopic_slot(double h_ss, double h_ps, double e_h, const SystemParams& params, double tol = 1e-10);

struct MyopicResult {
  std::vector<MyopicSlot> slots;
  double value = 0.0;  // sum_i gamma^i rate_i, i from 1
};

MyopicResult myopic_run(const Trajectory& trajectory, const SystemParams& params, double tol = 1e-10);

}  // namespace ehcrn

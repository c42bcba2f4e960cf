#pragma once

// Offline harvest-or-transmit schedule for a known N-slot trajectory. The
// mixed-integer problem is solved by generalized Benders decomposition: a
// concave power-allocation primal for a fixed harvest vector, and a master
// problem over harvest vectors bounded by Lagrangian cuts. A brute-force
// enumeration over all harvest vectors serves as the correctness oracle.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ehcrn/model.hpp"

namespace ehcrn {

/// Harvest indicator per slot: 1 = harvest, 0 = transmit.
using HarvestVector = std::vector<std::uint8_t>;

/// Bit i of the mask is slot i+1's indicator.
std::uint64_t to_mask(std::span<const std::uint8_t> i_h);
HarvestVector from_mask(std::uint64_t mask, std::size_t n_slots);

struct OfflineInstance {
  Trajectory trajectory;
  SystemParams params;

  std::size_t size() const { return trajectory.size(); }
  double p_max() const { return params.power_grid.back(); }
};

/// Packed lower-triangular matrix beta(j, l), l <= j (0-based slots).
class LowerTriangular {
 public:
  LowerTriangular() = default;
  explicit LowerTriangular(std::size_t n) : n_(n), data_(n * (n + 1) / 2, 0.0) {}

  double& operator()(std::size_t j, std::size_t l) { return data_[j * (j + 1) / 2 + l]; }
  double operator()(std::size_t j, std::size_t l) const { return data_[j * (j + 1) / 2 + l]; }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Multipliers of the dualized primal constraints, in bpcu per W (or per J).
struct Multipliers {
  std::vector<double> mu;      // p_i <= P_max
  std::vector<double> lambda;  // p_i <= (1 - I_i) M_i, M_i = min(P_max, B_max, B_0 + eta sum_{j<i} E_j)
  std::vector<double> nu;      // energy causality, prefix 1..i
  LowerTriangular beta;        // battery capacity, window l..j
};

struct PrimalSolution {
  std::vector<double> powers;  // W
  Multipliers duals;
  double objective = 0.0;  // sum_i gamma^i log2(1 + g_i p_i)
  double kkt_residual = 0.0;         // relative stationarity error
  double slackness_residual = 0.0;   // max |multiplier * slack|
  double max_violation = 0.0;        // largest constraint violation (J or W)
  std::size_t ipm_iterations = 0;
};

/// Optimal powers and multipliers for a fixed harvest vector.
PrimalSolution solve_primal(std::span<const std::uint8_t> i_h, const OfflineInstance& instance,
                            double tol = 1e-8);

/// The Lagrangian at (powers, duals) for harvest vector i_h; affine in i_h.
double lagrangian_value(std::span<const double> powers, const Multipliers& duals,
                        std::span<const std::uint8_t> i_h, const OfflineInstance& instance);

/// Water-filling power for slot i at aggregate price zeta (bpcu per W), clipped to [0, P_max].
double water_filling_power(const OfflineInstance& instance, std::size_t slot, double zeta);

/// Aggregate constraint price seen by slot i: lambda_i + mu_i + sum of every nu/beta
/// whose window contains i.
std::vector<double> aggregate_prices(const Multipliers& duals);

/// Affine bound t <= constant + sum_i coefficients[i] * I_i.
struct BendersCut {
  double constant = 0.0;
  std::vector<double> coefficients;

  double value(std::span<const std::uint8_t> i_h) const;
  double value(std::uint64_t mask) const;
};

BendersCut make_cut(const PrimalSolution& solution, const OfflineInstance& instance);

struct MasterSolution {
  HarvestVector i_h;
  std::uint64_t mask = 0;
  double upper = 0.0;
};

inline constexpr std::size_t kMaxMasterSlots = 24;
inline constexpr std::size_t kMaxBruteForceSlots = 16;

class ProblemTooLarge : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Exact master over {0,1}^N kept incrementally: the pointwise minimum of all cuts
/// is stored for every harvest vector, so adding a cut and re-solving are O(2^N).
class MasterProblem {
 public:
  explicit MasterProblem(std::size_t n_slots, bool parallel = true);

  void add_cut(const BendersCut& cut);
  MasterSolution solve() const;
  /// add_cut followed by solve, fused into one sweep of the table.
  MasterSolution add_cut_and_solve(const BendersCut& cut);
  std::size_t cut_count() const { return cuts_; }

 private:
  std::size_t n_slots_;
  bool parallel_;
  std::size_t cuts_ = 0;
  std::vector<double> running_min_;
};

/// argmax over i_h of min over cuts; ties go to the smallest mask.
MasterSolution solve_master(std::span<const BendersCut> cuts, std::size_t n_slots);

struct BoundRecord {
  std::size_t iteration = 0;
  double lower = 0.0;
  double upper = 0.0;
};

struct GbdOptions {
  double gap_tolerance = 1e-4;
  std::size_t max_iterations = 200;
  std::uint64_t seed = 1;
  double primal_tolerance = 1e-8;
  bool parallel = true;
};

struct GbdResult {
  HarvestVector i_h;
  std::vector<double> powers;
  double value = 0.0;
  std::vector<BoundRecord> history;

  std::size_t iterations() const { return history.size(); }
  double gap() const { return history.empty() ? 0.0 : history.back().upper - history.back().lower; }
};

class GbdIterationLimit : public std::runtime_error {
 public:
  GbdIterationLimit(const std::string& what, GbdResult incumbent)
      : std::runtime_error(what), incumbent_(std::move(incumbent)) {}
  const GbdResult& incumbent() const { return incumbent_; }
  double gap() const { return incumbent_.gap(); }

 private:
  GbdResult incumbent_;
};

GbdResult gbd(const OfflineInstance& instance, const GbdOptions& options = {});

struct BruteForceResult {
  HarvestVector i_h;
  std::vector<double> powers;
  double value = 0.0;
};

BruteForceResult brute_force_offline(const OfflineInstance& instance, double tol = 1e-8, bool parallel = true);

/// Per-slot undiscounted rates of a power schedule.
std::vector<double> slot_rates(const OfflineInstance& instance, std::span<const double> powers);

}  // namespace ehcrn

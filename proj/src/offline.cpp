#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include "ehcrn/kernels.hpp"
#include "ehcrn/offline.hpp"
#include "ehcrn/rng.hpp"

namespace ehcrn {

MasterProblem::MasterProblem(std::size_t n_slots, bool parallel) : n_slots_(n_slots), parallel_(parallel) {
  if (n_slots > kMaxMasterSlots) {
    throw ProblemTooLarge("master problem supports at most " + std::to_string(kMaxMasterSlots) + " slots");
  }
  running_min_.assign(std::size_t{1} << n_slots, std::numeric_limits<double>::infinity());
}

void MasterProblem::add_cut(const BendersCut& cut) {
  if (cut.coefficients.size() != n_slots_) throw std::invalid_argument("cut length differs from slot count");
  if (parallel_) {
    kernels::omp::accumulate_cut(running_min_, cut.constant, cut.coefficients);
  } else {
    kernels::serial::accumulate_cut(running_min_, cut.constant, cut.coefficients);
  }
  ++cuts_;
}

MasterSolution MasterProblem::solve() const {
  if (cuts_ == 0) throw std::logic_error("master problem has no cuts");
  const kernels::MaskValue best =
      parallel_ ? kernels::omp::argmax(running_min_) : kernels::serial::argmax(running_min_);
  return {from_mask(best.mask, n_slots_), best.mask, best.value};
}

MasterSolution MasterProblem::add_cut_and_solve(const BendersCut& cut) {
  if (cut.coefficients.size() != n_slots_) throw std::invalid_argument("cut length differs from slot count");
  const kernels::MaskValue best =
      parallel_ ? kernels::omp::accumulate_cut_argmax(running_min_, cut.constant, cut.coefficients)
                : kernels::serial::accumulate_cut_argmax(running_min_, cut.constant, cut.coefficients);
  ++cuts_;
  return {from_mask(best.mask, n_slots_), best.mask, best.value};
}

MasterSolution solve_master(std::span<const BendersCut> cuts, std::size_t n_slots) {
  MasterProblem master(n_slots, false);
  for (const auto& c : cuts) master.add_cut(c);
  return master.solve();
}

GbdResult gbd(const OfflineInstance& instance, const GbdOptions& options) {
  const std::size_t n = instance.size();
  if (n > kMaxMasterSlots) {
    throw ProblemTooLarge("offline solver supports at most " + std::to_string(kMaxMasterSlots) + " slots");
  }
  if (!(options.gap_tolerance > 0.0)) throw std::invalid_argument("gap tolerance must be positive");
  if (options.max_iterations == 0) throw std::invalid_argument("max_iterations must be positive");

  GbdResult best;
  Rng rng(options.seed);
  HarvestVector i_h(n);
  for (auto& bit : i_h) bit = uniform01(rng) < 0.5 ? 1 : 0;

  MasterProblem master(n, options.parallel);
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    const PrimalSolution sol = solve_primal(i_h, instance, options.primal_tolerance);
    if (sol.objective > lower) {
      lower = sol.objective;
      best.i_h = i_h;
      best.powers = sol.powers;
      best.value = sol.objective;
    }
    const MasterSolution next = master.add_cut_and_solve(make_cut(sol, instance));
    upper = std::min(upper, next.upper);
    best.history.push_back({it, lower, upper});
    if (upper - lower <= options.gap_tolerance) return best;
    i_h = next.i_h;
  }
  throw GbdIterationLimit("offline solver hit the iteration limit with gap " + std::to_string(upper - lower),
                          std::move(best));
}

BruteForceResult brute_force_offline(const OfflineInstance& instance, double tol, bool parallel) {
  const std::size_t n = instance.size();
  if (n > kMaxBruteForceSlots) {
    throw ProblemTooLarge("enumeration supports at most " + std::to_string(kMaxBruteForceSlots) + " slots");
  }
  const std::int64_t count = std::int64_t{1} << n;
  std::vector<double> values(static_cast<std::size_t>(count));
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (std::int64_t m = 0; m < count; ++m) {
    try {
      const HarvestVector i_h = from_mask(static_cast<std::uint64_t>(m), n);
      values[static_cast<std::size_t>(m)] = solve_primal(i_h, instance, tol).objective;
    } catch (...) {
#pragma omp critical(ehcrn_brute_force_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  const kernels::MaskValue best = kernels::serial::argmax(values);
  BruteForceResult out;
  out.i_h = from_mask(best.mask, n);
  const PrimalSolution sol = solve_primal(out.i_h, instance, tol);
  out.powers = sol.powers;
  out.value = sol.objective;
  return out;
}

}  // namespace ehcrn

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "ehcrn/harness.hpp"

using namespace ehcrn;

namespace {

ExperimentConfig small_config(std::size_t episodes) {
  ExperimentConfig c = default_config();
  c.n_slots = 8;
  c.episodes = episodes;
  c.seed = 3;
  return c;
}

std::string csv(const Report& r, const ExperimentConfig& c) {
  std::ostringstream out;
  write_report_csv(out, r, c);
  return out.str();
}

}  // namespace

TEST_CASE("reports are reproducible byte for byte") {
  for (std::size_t episodes : {1u, 6u}) {
    const ExperimentConfig c = small_config(episodes);
    CHECK(csv(run_comparison(c), c) == csv(run_comparison(c), c));
  }
  ExperimentConfig e = small_config(5);
  apply_sweep(e, "epsilon=0.02,0.05");
  CHECK(csv(run_sweep(e), e) == csv(run_sweep(e), e));
}

TEST_CASE("report rows are complete and stamped") {
  ExperimentConfig c = small_config(4);
  apply_sweep(c, "P_max=0.6e-3,1e-3");
  const Report r = run_sweep(c);
  CHECK(r.rows.size() == 8);
  for (const auto& row : r.rows) {
    CHECK(row.samples == 4);
    CHECK(row.config_hash.size() == 16);
    CHECK(row.mean_transmit_slots + row.mean_harvest_slots == doctest::Approx(8.0));
  }
  CHECK(r.find(kOnlinePolicy, 0.6e-3).config_hash != r.find(kOnlinePolicy, 1e-3).config_hash);
  CHECK_THROWS_AS(r.find("nobody", 1.0), std::out_of_range);
  const std::string text = csv(r, c);
  CHECK(text.find("sweep_variable,sweep_value,policy,mean,std_error,transmit_slots,harvest_slots,n,failures,config_hash\n") !=
        std::string::npos);
  CHECK(text.rfind("# ", 0) == 0);
}

TEST_CASE("single seed: offline at least online") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ExperimentConfig c = small_config(1);
    c.seed = seed;
    const Report r = run_comparison(c);
    CHECK(r.find(kOfflinePolicy).mean >= r.find(kOnlinePolicy).mean - c.gap_tolerance);
    CHECK(r.find(kOfflinePolicy).mean >= r.find(kLearnedPolicy).mean - c.gap_tolerance);
  }
}

TEST_CASE("throughput falls as the primary power rises") {
  ExperimentConfig c = small_config(30);
  apply_sweep(c, "P_p=1e-3,2e-3,4e-3");
  const Report r = run_sweep(c);
  for (const char* policy : {kOfflinePolicy, kOnlinePolicy, kLearnedPolicy, kMyopicPolicy}) {
    const std::string policy_name(policy);
    CAPTURE(policy_name);
    CHECK(r.find(policy, 1e-3).mean > r.find(policy, 2e-3).mean);
    CHECK(r.find(policy, 2e-3).mean > r.find(policy, 4e-3).mean);
  }
}

TEST_CASE("zero battery capacity") {
  ExperimentConfig c = small_config(5);
  apply_sweep(c, "B_max=0,10e-3");
  const Report r = run_sweep(c);
  CHECK(r.find(kOfflinePolicy, 0.0).mean == 0.0);
  CHECK(r.find(kOnlinePolicy, 0.0).mean == 0.0);
  CHECK(r.find(kLearnedPolicy, 0.0).mean == 0.0);
  // The myopic baseline spends in-slot and never stores energy.
  CHECK(r.find(kMyopicPolicy, 0.0).mean == r.find(kMyopicPolicy, 10e-3).mean);
  CHECK(r.find(kMyopicPolicy, 0.0).mean > 0.0);
}

TEST_CASE("epsilon sweep accounting") {
  ExperimentConfig c = small_config(20);
  const Report r = run_epsilon_sweep(c);
  CHECK(r.rows.size() == 10);
  for (const auto& row : r.rows) {
    CHECK(row.policy == std::string(kLearnedPolicy));
    CHECK(row.mean_transmit_slots + row.mean_harvest_slots == doctest::Approx(8.0));
  }
  CHECK(r.rows.front().sweep_value == doctest::Approx(0.01));
  CHECK(r.find(kLearnedPolicy, 0.04).mean >= r.find(kLearnedPolicy, 0.01).mean);
}

TEST_CASE("invalid sweeps are rejected") {
  ExperimentConfig c = small_config(1);
  CHECK_THROWS_AS(apply_sweep(c, "gamma=0.5"), ConfigError);
  CHECK_THROWS_AS(at_sweep_point(c, "P_max", -1.0), ConfigError);
  ExperimentConfig e = small_config(1);
  apply_sweep(e, "epsilon=0.5");
  CHECK_THROWS_AS(run_capacity_sweeps(e), ConfigError);
}

TEST_CASE("capacity sweeps") {
  // Full-length trajectories: on short horizons the replayed infinite-horizon
  // policy need not improve with P_max.
  ExperimentConfig pm = small_config(30);
  pm.n_slots = 20;
  pm.gbd_max_iterations = 10000;
  apply_sweep(pm, "P_max=0.4e-3,0.6e-3,0.8e-3,1e-3");
  const Report rm = run_capacity_sweeps(pm);
  for (const char* policy : {kOfflinePolicy, kOnlinePolicy, kLearnedPolicy, kMyopicPolicy}) {
    const std::string policy_name(policy);
    CAPTURE(policy_name);
    const double slack = std::string(policy) == kOfflinePolicy ? pm.gap_tolerance : 0.0;
    for (std::size_t i = 1; i < pm.sweep_values.size(); ++i) {
      CHECK(rm.find(policy, pm.sweep_values[i]).mean >= rm.find(policy, pm.sweep_values[i - 1]).mean - slack);
    }
  }

  ExperimentConfig bm = small_config(30);
  bm.gbd_max_iterations = 10000;
  apply_sweep(bm, "B_max=1e-3,2e-3,5e-3,10e-3,20e-3");
  const Report rb = run_capacity_sweeps(bm);
  for (const char* policy : {kOfflinePolicy, kOnlinePolicy, kLearnedPolicy, kMyopicPolicy}) {
    const std::string policy_name(policy);
    CAPTURE(policy_name);
    const double top = rb.find(policy, 20e-3).mean, next = rb.find(policy, 10e-3).mean;
    CHECK(std::abs(top - next) <= 0.02 * std::max(top, next));
  }
  // The offline optimum can only grow with the battery.
  for (std::size_t i = 1; i < bm.sweep_values.size(); ++i) {
    CHECK(rb.find(kOfflinePolicy, bm.sweep_values[i]).mean >=
          rb.find(kOfflinePolicy, bm.sweep_values[i - 1]).mean - bm.gap_tolerance);
  }
}

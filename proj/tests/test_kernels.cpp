#include <doctest.h>

#include <cstring>
#include <limits>
#include <random>
#include <vector>

#include "ehcrn/config.hpp"
#include "ehcrn/kernels.hpp"
#include "helpers.hpp"

using namespace ehcrn;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("Bellman kernels agree bit for bit") {
  const ExperimentConfig c = default_config();
  const StateSpace space(c.params, c.markov, c.battery_step);
  const MdpTensors mdp = build_mdp(c.params, c.markov, space);
  std::mt19937_64 rng(1);
  const std::vector<double> v = random_vector(mdp.n_states(), rng, 0.0, 5.0);
  std::vector<std::uint32_t> policy(mdp.n_states());
  for (std::size_t s = 0; s < policy.size(); ++s) policy[s] = static_cast<std::uint32_t>(s % mdp.n_actions());

  std::vector<double> a(mdp.n_states()), b(mdp.n_states());
  const double da = kernels::serial::bellman_sweep(mdp, policy, 0.9, v, a);
  const double db = kernels::omp::bellman_sweep(mdp, policy, 0.9, v, b);
  CHECK(same_bits(a, b));
  CHECK(da == db);

  std::vector<double> qa(mdp.n_states() * mdp.n_actions()), qb(qa.size());
  kernels::serial::action_values(mdp, v, 0.9, qa);
  kernels::omp::action_values(mdp, v, 0.9, qb);
  CHECK(same_bits(qa, qb));
}

TEST_CASE("cut accumulation matches a direct evaluation") {
  std::mt19937_64 rng(2);
  for (std::size_t n : {1u, 2u, 5u, 11u, 14u}) {
    const std::size_t size = std::size_t{1} << n;
    std::vector<double> serial(size, std::numeric_limits<double>::infinity()), parallel = serial, fused = serial;
    std::vector<double> fused_omp = serial;
    std::vector<double> direct(size, std::numeric_limits<double>::infinity());
    for (int cut = 0; cut < 4; ++cut) {
      const std::vector<double> coef = random_vector(n, rng);
      const double constant = random_vector(1, rng)[0];
      kernels::serial::accumulate_cut(serial, constant, coef);
      kernels::omp::accumulate_cut(parallel, constant, coef);
      const auto fs = kernels::serial::accumulate_cut_argmax(fused, constant, coef);
      const auto fo = kernels::omp::accumulate_cut_argmax(fused_omp, constant, coef);
      for (std::size_t m = 0; m < size; ++m) {
        double v = constant;
        for (std::size_t i = 0; i < n; ++i) {
          if (m >> i & 1U) v += coef[i];
        }
        direct[m] = std::min(direct[m], v);
      }
      CHECK(same_bits(serial, parallel));
      CHECK(same_bits(serial, fused));
      CHECK(same_bits(serial, fused_omp));
      const auto am = kernels::serial::argmax(serial);
      CHECK(fs.mask == am.mask);
      CHECK(fo.mask == am.mask);
      CHECK(fs.value == am.value);
    }
    for (std::size_t m = 0; m < size; ++m) REQUIRE(serial[m] == doctest::Approx(direct[m]).epsilon(1e-12));
  }
}

TEST_CASE("argmax prefers the smallest index on ties") {
  std::vector<double> v(1000, 0.0);
  v[17] = v[400] = v[999] = 3.0;
  CHECK(kernels::serial::argmax(v).mask == 17);
  CHECK(kernels::omp::argmax(v).mask == 17);
  std::vector<double> fused(8, std::numeric_limits<double>::infinity());
  const auto r = kernels::serial::accumulate_cut_argmax(fused, 1.0, std::vector<double>{0.0, 0.0, 0.0});
  CHECK(r.mask == 0);
  CHECK(r.value == 1.0);
}

TEST_CASE("cut size mismatch is rejected") {
  std::vector<double> table(8, 0.0);
  CHECK_THROWS_AS(kernels::serial::accumulate_cut(table, 0.0, std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

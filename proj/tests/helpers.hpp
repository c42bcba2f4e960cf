#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "ehcrn/config.hpp"
#include "ehcrn/dp.hpp"
#include "ehcrn/model.hpp"

namespace testing {

// Random dense MDP with strictly positive transition rows and rewards in [0, 1).
inline ehcrn::MdpTensors random_mdp(std::size_t n_s, std::size_t n_a, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> t(n_s * n_s * n_a), r(n_s * n_a);
  for (std::size_t s = 0; s < n_s; ++s) {
    for (std::size_t a = 0; a < n_a; ++a) {
      double total = 0.0;
      std::vector<double> row(n_s);
      for (auto& x : row) total += (x = 0.05 + u(rng));
      for (std::size_t k = 0; k < n_s; ++k) t[(s * n_s + k) * n_a + a] = row[k] / total;
      r[s * n_a + a] = u(rng);
    }
  }
  return ehcrn::MdpTensors::from_dense(n_s, n_a, t, r);
}

// V = (I - gamma P_pi)^{-1} r_pi by a dense LU solve.
inline std::vector<double> exact_values(const ehcrn::MdpTensors& mdp, const ehcrn::Policy& pi, double gamma) {
  const auto n = static_cast<Eigen::Index>(mdp.n_states());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b(n);
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto su = static_cast<std::size_t>(s);
    b[s] = mdp.reward(su, pi[su]);
    for (const auto& t : mdp.transitions(su, pi[su])) a(s, t.next) -= gamma * t.prob;
  }
  const Eigen::VectorXd v = a.partialPivLu().solve(b);
  return {v.data(), v.data() + v.size()};
}

// Every deterministic policy of a small MDP, in odometer order.
inline std::vector<ehcrn::Policy> all_policies(std::size_t n_s, std::size_t n_a) {
  std::vector<ehcrn::Policy> out;
  ehcrn::Policy p;
  p.actions.assign(n_s, 0);
  while (true) {
    out.push_back(p);
    std::size_t k = 0;
    while (k < n_s && ++p.actions[k] == n_a) p.actions[k++] = 0;
    if (k == n_s) return out;
  }
}

}  // namespace testing

namespace testing {

// Four-state battery-like chain. Action 0 charges (no reward, moves up with
// probability 0.8); action 1 discharges for a level-dependent reward and
// usually falls back to state 0.
inline ehcrn::MdpTensors teaching_mdp() {
  constexpr std::size_t n = 4, na = 2;
  std::vector<double> t(n * n * na, 0.0), r(n * na, 0.0);
  const double payout[n] = {0.05, 0.3, 0.7, 1.5};
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t up = std::min<std::size_t>(s + 1, n - 1);
    t[(s * n + up) * na + 0] += 0.8;
    t[(s * n + s) * na + 0] += 0.2;
    t[(s * n + 0) * na + 1] += 0.7;
    t[(s * n + s) * na + 1] += 0.3;
    r[s * na + 1] = payout[s];
  }
  return ehcrn::MdpTensors::from_dense(n, na, t, r);
}

}  // namespace testing

#include "ehcrn/offline.hpp"

namespace testing {

inline ehcrn::OfflineInstance link_instance(std::size_t n, std::uint64_t seed) {
  const ehcrn::ExperimentConfig c = ehcrn::default_config();
  return {ehcrn::sample_trajectory(c.markov, n, seed), c.params};
}

// Battery recursion B <- min(B + I eta E, B_max) - p tau with p tau <= B;
// true when every slot can pay for its power.
inline bool schedule_feasible(const ehcrn::OfflineInstance& inst, const std::vector<std::uint8_t>& i_h,
                              const std::vector<double>& p, double slack = 1e-15) {
  const auto& prm = inst.params;
  double b = prm.initial_battery;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || p[i] > inst.p_max() + slack) return false;
    if (i_h[i]) {
      if (p[i] != 0.0) return false;
      b = std::min(b + prm.efficiency * inst.trajectory.e_h[i], prm.battery_capacity);
    } else {
      if (p[i] * prm.slot_length > b + slack) return false;
      b -= p[i] * prm.slot_length;
    }
  }
  return true;
}

inline double schedule_value(const ehcrn::OfflineInstance& inst, const std::vector<double>& p) {
  double v = 0.0, w = 1.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    w *= inst.params.gamma;
    v += w * ehcrn::instantaneous_rate(inst.trajectory.h_ss[i], inst.trajectory.h_ps[i], p[i], inst.params);
  }
  return v;
}

}  // namespace testing

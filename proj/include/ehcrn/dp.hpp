#pragma once

// Online-optimal policy by policy iteration on a known finite MDP.

#include <cstddef>
#include <functional>
#include <vector>

#include "ehcrn/model.hpp"

namespace ehcrn {

/// Expected discounted sum-rate per state (bpcu).
using ValueTable = std::vector<double>;

/// Row-major N_S x N_A action-value table.
struct ActionValueTable {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> q;

  double operator()(std::size_t s, std::size_t a) const { return q[s * n_actions + a]; }
};

/// Iterative (Jacobi) evaluation of a fixed policy. Stops once successive iterates
/// differ by at most delta * (1 - gamma) / gamma in sup-norm, so the returned table
/// is within delta of the true V^pi.
ValueTable policy_evaluation(const Policy& policy, const MdpTensors& mdp, double gamma, double delta);

ActionValueTable q_from_v(const ValueTable& v, const MdpTensors& mdp, double gamma);

/// Greedy policy with respect to q_from_v(v); ties resolve to the lowest action index.
Policy policy_improvement(const ValueTable& v, const MdpTensors& mdp, double gamma);

/// max_s |V(s) - max_a Q(s, a)|.
double bellman_residual(const ValueTable& v, const MdpTensors& mdp, double gamma);

struct PolicyIterationResult {
  Policy policy;
  ValueTable values;
  std::size_t iterations = 0;
};

using PolicyIterationObserver = std::function<void(const Policy&, const ValueTable&)>;

/// Alternates evaluation and greedy improvement from the all-harvest policy until the
/// improvement step returns the policy it was given. `observer`, if set, sees every
/// evaluated policy.
PolicyIterationResult policy_iteration(const MdpTensors& mdp, double gamma, double delta = 1e-8,
                                       const PolicyIterationObserver& observer = {});

}  // namespace ehcrn

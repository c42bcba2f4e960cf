#include "ehcrn/dp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ehcrn/kernels.hpp"

namespace ehcrn {

namespace {

void check_discount(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
}

ValueTable evaluate_from(const Policy& policy, const MdpTensors& mdp, double gamma, double delta,
                         ValueTable v) {
  check_discount(gamma);
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (policy.size() != mdp.n_states()) throw std::invalid_argument("policy size does not match MDP");
  const double threshold = delta * (1.0 - gamma) / gamma;
  ValueTable next(mdp.n_states(), 0.0);
  while (true) {
    const double diff = kernels::omp::bellman_sweep(mdp, policy.actions, gamma, v, next);
    v.swap(next);
    if (diff <= threshold) return v;
  }
}

// Greedy step that keeps the incumbent action unless another is better by more
// than `tie_tol`; stops evaluation noise from cycling the driver.
Policy improve_keeping(const ActionValueTable& q, const Policy& incumbent, double tie_tol) {
  Policy out;
  out.actions.resize(q.n_states);
  for (std::size_t s = 0; s < q.n_states; ++s) {
    std::uint32_t best = 0;
    for (std::uint32_t a = 1; a < q.n_actions; ++a) {
      if (q(s, a) > q(s, best)) best = a;
    }
    const std::uint32_t current = incumbent[s];
    out.actions[s] = q(s, current) >= q(s, best) - tie_tol ? current : best;
  }
  return out;
}

}  // namespace

ValueTable policy_evaluation(const Policy& policy, const MdpTensors& mdp, double gamma, double delta) {
  return evaluate_from(policy, mdp, gamma, delta, ValueTable(mdp.n_states(), 0.0));
}

ActionValueTable q_from_v(const ValueTable& v, const MdpTensors& mdp, double gamma) {
  if (v.size() != mdp.n_states()) throw std::invalid_argument("value table size does not match MDP");
  ActionValueTable q{mdp.n_states(), mdp.n_actions(), std::vector<double>(mdp.n_states() * mdp.n_actions())};
  kernels::omp::action_values(mdp, v, gamma, q.q);
  return q;
}

Policy policy_improvement(const ValueTable& v, const MdpTensors& mdp, double gamma) {
  const ActionValueTable q = q_from_v(v, mdp, gamma);
  Policy out;
  out.actions.resize(q.n_states);
  for (std::size_t s = 0; s < q.n_states; ++s) {
    std::uint32_t best = 0;
    for (std::uint32_t a = 1; a < q.n_actions; ++a) {
      if (q(s, a) > q(s, best)) best = a;
    }
    out.actions[s] = best;
  }
  return out;
}

double bellman_residual(const ValueTable& v, const MdpTensors& mdp, double gamma) {
  const ActionValueTable q = q_from_v(v, mdp, gamma);
  double worst = 0.0;
  for (std::size_t s = 0; s < q.n_states; ++s) {
    double best = q(s, 0);
    for (std::size_t a = 1; a < q.n_actions; ++a) best = std::max(best, q(s, a));
    worst = std::max(worst, std::abs(v[s] - best));
  }
  return worst;
}

PolicyIterationResult policy_iteration(const MdpTensors& mdp, double gamma, double delta,
                                       const PolicyIterationObserver& observer) {
  check_discount(gamma);
  PolicyIterationResult out;
  out.policy.actions.assign(mdp.n_states(), kHarvestAction);
  out.values.assign(mdp.n_states(), 0.0);
  // Finite MDPs have finitely many deterministic policies; the cap only guards
  // against a malformed model.
  const std::size_t max_iterations = 10000;
  while (out.iterations < max_iterations) {
    out.values = evaluate_from(out.policy, mdp, gamma, delta, std::move(out.values));
    ++out.iterations;
    if (observer) observer(out.policy, out.values);
    Policy next = improve_keeping(q_from_v(out.values, mdp, gamma), out.policy, delta);
    if (next == out.policy) return out;
    out.policy = std::move(next);
  }
  throw std::runtime_error("policy iteration did not converge");
}

}  // namespace ehcrn

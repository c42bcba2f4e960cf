#include "ehcrn/myopic.hpp"

#include <cmath>
#include <stdexcept>

namespace ehcrn {

double myopic_objective(double alpha, double c) {
  if (alpha <= 0.0) return 0.0;
  return alpha * std::log2(1.0 + (1.0 - alpha) / alpha * c);
}

double myopic_alpha_min(double e_h, const SystemParams& params) {
  const double harvested = params.efficiency * e_h;
  const double p_max = params.power_grid.back();
  if (harvested <= 0.0) return 0.0;
  return harvested / (harvested + p_max);
}

double myopic_alpha(double h_ss, double h_ps, double e_h, const SystemParams& params, double tol) {
  if (!(e_h >= 0.0)) throw std::invalid_argument("harvested energy must be non-negative");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (e_h == 0.0) return 1.0;
  const double c = params.efficiency * e_h * effective_gain(h_ss, h_ps, params);
  const auto f = [c](double a) { return myopic_objective(a, c); };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = std::max(myopic_alpha_min(e_h, params), 1e-9);
  double hi = 1.0;
  if (lo >= hi) return 1.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > tol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    }
  }
  // The maximizer can sit on the lower end of the bracket.
  const double mid = 0.5 * (lo + hi);
  const double a0 = std::max(myopic_alpha_min(e_h, params), 1e-9);
  return f(a0) > f(mid) ? a0 : mid;
}

MyopicSlot myopic_slot(double h_ss, double h_ps, double e_h, const SystemParams& params, double tol) {
  MyopicSlot s;
  s.alpha = myopic_alpha(h_ss, h_ps, e_h, params, tol);
  s.power = (1.0 - s.alpha) / s.alpha * params.efficiency * e_h;
  s.rate = myopic_objective(s.alpha, params.efficiency * e_h * effective_gain(h_ss, h_ps, params));
  return s;
}

MyopicResult myopic_run(const Trajectory& trajectory, const SystemParams& params, double tol) {
  MyopicResult out;
  double discount = 1.0;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    discount *= params.gamma;
    out.slots.push_back(myopic_slot(trajectory.h_ss[i], trajectory.h_ps[i], trajectory.e_h[i], params, tol));
    out.value += discount * out.slots.back().rate;
  }
  return out;
}

}  // namespace ehcrn

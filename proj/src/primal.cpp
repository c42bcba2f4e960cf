// Primal power allocation for a fixed harvest vector, its multipliers, and
// the Lagrangian cuts built from them.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ehcrn/offline.hpp"

namespace ehcrn {

namespace {

// Right-hand sides at or below this (J) force every power they cover to zero.
constexpr double kZeroRhs = 1e-15;

struct SlotData {
  std::size_t n = 0;
  std::vector<double> weight;  // gamma^i / ln 2, i from 1
  std::vector<double> gain;    // h_ss / (sigma^2 + h_ps P_p)
  std::vector<double> energy;
  std::vector<std::uint8_t> harvest;
  std::vector<double> prefix_rhs;  // B_0 + eta sum_{j<=i} I_j E_j
  std::vector<double> window_in;   // eta sum_{q=l..j} I_q E_q, packed (j, l)
  std::vector<double> big_m;  // min(P_max, B_max, B_0 + eta sum_{j<i} E_j)
  double b0 = 0.0;
  double bmax = 0.0;
  double pmax = 0.0;

  SlotData(std::span<const std::uint8_t> i_h, const OfflineInstance& inst) {
    const auto& t = inst.trajectory;
    const auto& p = inst.params;
    n = t.size();
    if (i_h.size() != n) throw std::invalid_argument("harvest vector length differs from trajectory");
    b0 = p.initial_battery;
    bmax = p.battery_capacity;
    pmax = inst.p_max();
    double discount = 1.0;
    double acc = b0;
    double reachable = b0;  // energy that could be stored before slot i
    for (std::size_t i = 0; i < n; ++i) {
      if (i_h[i] > 1) throw std::invalid_argument("harvest indicators must be 0 or 1");
      discount *= p.gamma;
      weight.push_back(discount / std::numbers::ln2);
      gain.push_back(effective_gain(t.h_ss[i], t.h_ps[i], p));
      energy.push_back(t.e_h[i]);
      harvest.push_back(i_h[i]);
      big_m.push_back(std::min({pmax, bmax, reachable}));
      reachable += p.efficiency * t.e_h[i];
      if (i_h[i]) acc += p.efficiency * t.e_h[i];
      prefix_rhs.push_back(acc);
    }
    window_in.assign(n * (n + 1) / 2, 0.0);
    for (std::size_t l = 0; l < n; ++l) {
      double w = 0.0;
      for (std::size_t j = l; j < n; ++j) {
        if (harvest[j]) w += p.efficiency * energy[j];
        window_in[j * (j + 1) / 2 + l] = w;
      }
    }
  }

  double window_rhs(std::size_t j, std::size_t l) const { return bmax + window_in[j * (j + 1) / 2 + l]; }
  double marginal(std::size_t i, double p) const { return weight[i] * gain[i] / (1.0 + gain[i] * p); }
};

double aggregate_price(const Multipliers& d, std::size_t i) {
  const std::size_t n = d.mu.size();
  double z = d.lambda[i] + d.mu[i];
  for (std::size_t j = i; j < n; ++j) {
    z += d.nu[j];
    for (std::size_t l = 0; l <= i; ++l) z += d.beta(j, l);
  }
  return z;
}

// ---------------------------------------------------------------------------
// Primal-dual interior point for
//   min -sum_i w_i log(1 + g_i x_i)  s.t.  G x <= h
// with a strictly feasible start (all h > 0 for rows with a nonzero entry).

struct IpmResult {
  Eigen::VectorXd x;
  Eigen::VectorXd z;
  std::size_t iterations = 0;
};

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

IpmResult interior_point(const Eigen::VectorXd& w, const Eigen::VectorXd& g, const Eigen::MatrixXd& G,
                         const Eigen::VectorXd& h, double start) {
  const Eigen::Index n = w.size();
  const Eigen::Index m = h.size();
  IpmResult r;
  r.x = Eigen::VectorXd::Constant(n, start);
  Eigen::VectorXd s = h - G * r.x;
  r.z = s.cwiseInverse();

  for (r.iterations = 0; r.iterations < 200; ++r.iterations) {
    const Eigen::ArrayXd denom = 1.0 + g.array() * r.x.array();
    const Eigen::VectorXd grad = (-(w.array() * g.array()) / denom).matrix();
    const Eigen::VectorXd hess = (w.array() * g.array().square() / denom.square()).matrix();
    const Eigen::VectorXd rd = grad + G.transpose() * r.z;
    const Eigen::VectorXd rp = G * r.x + s - h;
    const double mu = s.dot(r.z) / static_cast<double>(m);
    const double scale = 1.0 + grad.lpNorm<Eigen::Infinity>();
    if (mu <= 1e-14 && rd.lpNorm<Eigen::Infinity>() <= 1e-10 * scale && rp.lpNorm<Eigen::Infinity>() <= 1e-12) break;
    if (!(mu > 1e-30)) break;

    const Eigen::VectorXd d = r.z.cwiseQuotient(s);
    Eigen::MatrixXd k = G.transpose() * d.asDiagonal() * G;
    k.diagonal() += hess;
    const Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) break;

    auto direction = [&](const Eigen::VectorXd& tau, Eigen::VectorXd& dx, Eigen::VectorXd& ds,
                         Eigen::VectorXd& dz) {
      const Eigen::VectorXd rhs = -grad - G.transpose() * (tau.cwiseQuotient(s) + d.cwiseProduct(rp));
      dx = llt.solve(rhs);
      ds = -rp - G * dx;
      dz = tau.cwiseQuotient(s) - r.z - d.cwiseProduct(ds);
    };

    Eigen::VectorXd dx, ds, dz;
    direction(Eigen::VectorXd::Zero(m), dx, ds, dz);
    const double alpha_aff = std::min(max_step(s, ds), max_step(r.z, dz));
    const double mu_aff = (s + alpha_aff * ds).dot(r.z + alpha_aff * dz) / static_cast<double>(m);
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

    const Eigen::VectorXd tau = (Eigen::VectorXd::Constant(m, sigma * mu) - ds.cwiseProduct(dz)).eval();
    direction(tau, dx, ds, dz);
    const double alpha = std::min(1.0, 0.995 * std::min(max_step(s, ds), max_step(r.z, dz)));
    r.x += alpha * dx;
    s += alpha * ds;
    r.z += alpha * dz;
  }
  return r;
}

struct RowTag {
  enum Kind { kPrefix, kWindow, kPeak, kNonNeg } kind;
  std::size_t a;  // slot (prefix end, window end, or variable)
  std::size_t b;  // window start
};

struct Slacks {
  double violation = 0.0;
  double slackness = 0.0;
};

Slacks constraint_slacks(const SlotData& d, std::span<const double> p, const Multipliers& u) {
  Slacks out;
  auto visit = [&](double slack, double mult) {
    out.violation = std::max(out.violation, -slack);
    out.slackness = std::max(out.slackness, std::abs(mult * slack));
  };
  double cum = 0.0;
  for (std::size_t i = 0; i < d.n; ++i) {
    out.violation = std::max(out.violation, -p[i]);
    visit(d.pmax - p[i], u.mu[i]);
    visit((d.harvest[i] ? 0.0 : d.big_m[i]) - p[i], u.lambda[i]);
    cum += p[i];
    visit(d.prefix_rhs[i] - cum, u.nu[i]);
  }
  for (std::size_t l = 0; l < d.n; ++l) {
    double used = 0.0;
    for (std::size_t j = l; j < d.n; ++j) {
      used += p[j];
      visit(d.window_rhs(j, l) - used, u.beta(j, l));
    }
  }
  return out;
}

}  // namespace

std::uint64_t to_mask(std::span<const std::uint8_t> i_h) {
  if (i_h.size() > 64) throw std::invalid_argument("harvest vector longer than 64 slots");
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < i_h.size(); ++i) {
    if (i_h[i]) mask |= std::uint64_t{1} << i;
  }
  return mask;
}

HarvestVector from_mask(std::uint64_t mask, std::size_t n_slots) {
  HarvestVector out(n_slots, 0);
  for (std::size_t i = 0; i < n_slots && i < 64; ++i) out[i] = static_cast<std::uint8_t>((mask >> i) & 1U);
  return out;
}

std::vector<double> aggregate_prices(const Multipliers& duals) {
  std::vector<double> z(duals.mu.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = aggregate_price(duals, i);
  return z;
}

double water_filling_power(const OfflineInstance& instance, std::size_t slot, double zeta) {
  const auto& t = instance.trajectory;
  const double pmax = instance.p_max();
  if (!(zeta > 0.0)) return pmax;
  double discount = 1.0;
  for (std::size_t i = 0; i <= slot; ++i) discount *= instance.params.gamma;
  const double level = discount / (std::numbers::ln2 * zeta);
  const auto& p = instance.params;
  const double p_s = level - p.noise_power / t.h_ss[slot] - t.h_ps[slot] * p.primary_power / t.h_ss[slot];
  return std::clamp(p_s, 0.0, pmax);
}

PrimalSolution solve_primal(std::span<const std::uint8_t> i_h, const OfflineInstance& instance, double tol) {
  const SlotData d(i_h, instance);
  const std::size_t n = d.n;

  PrimalSolution sol;
  Multipliers& u = sol.duals;
  u.mu.assign(n, 0.0);
  u.lambda.assign(n, 0.0);
  u.nu.assign(n, 0.0);
  u.beta = LowerTriangular(n);

  // Slots that cannot carry power: harvest slots, slots before any stored
  // energy, and everything when the battery or the power cap is zero.
  std::vector<bool> free(n, false);
  std::vector<std::size_t> column(n, 0);
  std::size_t n_free = 0;
  for (std::size_t i = 0; i < n; ++i) {
    free[i] = !d.harvest[i] && d.prefix_rhs[i] > kZeroRhs && d.bmax > kZeroRhs && d.pmax > kZeroRhs;
    if (free[i]) column[i] = n_free++;
  }

  std::vector<double> ipm_powers(n, 0.0);
  if (n_free > 0) {
    std::vector<RowTag> tags;
    std::vector<std::vector<std::size_t>> supports;
    std::vector<double> rhs;
    auto add_interval = [&](RowTag tag, std::size_t lo, std::size_t hi, double b) {
      std::vector<std::size_t> cols;
      for (std::size_t i = lo; i <= hi; ++i) {
        if (free[i]) cols.push_back(column[i]);
      }
      if (cols.empty()) return;
      tags.push_back(tag);
      supports.push_back(std::move(cols));
      rhs.push_back(b / d.pmax);
    };
    for (std::size_t i = 0; i < n; ++i) add_interval({RowTag::kPrefix, i, 0}, 0, i, d.prefix_rhs[i]);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t l = 0; l <= j; ++l) add_interval({RowTag::kWindow, j, l}, l, j, d.window_rhs(j, l));
    }
    double min_rhs = 1.0;
    for (double b : rhs) min_rhs = std::min(min_rhs, b);

    const auto m = static_cast<Eigen::Index>(tags.size() + 2 * n_free);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(n_free));
    Eigen::VectorXd h(m);
    Eigen::Index row = 0;
    for (std::size_t r = 0; r < tags.size(); ++r, ++row) {
      for (std::size_t c : supports[r]) G(row, static_cast<Eigen::Index>(c)) = 1.0;
      h[row] = rhs[r];
    }
    Eigen::VectorXd w(static_cast<Eigen::Index>(n_free)), g(static_cast<Eigen::Index>(n_free));
    for (std::size_t i = 0; i < n; ++i) {
      if (!free[i]) continue;
      const auto c = static_cast<Eigen::Index>(column[i]);
      w[c] = d.weight[i];
      g[c] = d.gain[i] * d.pmax;
      tags.push_back({RowTag::kPeak, i, 0});
      G(row, c) = 1.0;
      h[row++] = 1.0;
      tags.push_back({RowTag::kNonNeg, i, 0});
      G(row, c) = -1.0;
      h[row++] = 0.0;
    }

    const double start = std::min(0.5, min_rhs / static_cast<double>(n_free + 1));
    const IpmResult ipm = interior_point(w, g, G, h, start);
    sol.ipm_iterations = ipm.iterations;
    for (std::size_t r = 0; r < tags.size(); ++r) {
      const double value = ipm.z[static_cast<Eigen::Index>(r)] / d.pmax;
      switch (tags[r].kind) {
        case RowTag::kPrefix: u.nu[tags[r].a] = value; break;
        case RowTag::kWindow: u.beta(tags[r].a, tags[r].b) = value; break;
        case RowTag::kPeak: u.mu[tags[r].a] = value; break;
        case RowTag::kNonNeg: break;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (free[i]) ipm_powers[i] = std::max(0.0, ipm.x[static_cast<Eigen::Index>(column[i])] * d.pmax);
    }
  }

  // Zero-power transmit slots sit under a tight zero-capacity constraint; price
  // that constraint just enough to make p = 0 stationary. The big-M row is
  // preferred because its cut coefficient vanishes when M_i = 0.
  for (std::size_t k = n; k-- > 0;) {
    if (d.harvest[k] || free[k]) continue;
    const double deficit = d.marginal(k, 0.0) - aggregate_price(u, k);
    if (deficit <= 0.0) continue;
    if (d.big_m[k] <= kZeroRhs) {
      u.lambda[k] += deficit;
    } else if (d.prefix_rhs[k] <= kZeroRhs) {
      u.nu[k] += deficit;
    } else if (d.bmax <= kZeroRhs) {
      u.beta(k, k) += deficit;
    } else {
      u.mu[k] += deficit;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (d.harvest[i]) u.lambda[i] = std::max(0.0, d.marginal(i, 0.0) - aggregate_price(u, i));
  }

  // Powers from the water-filling map at the final prices.
  const std::vector<double> zeta = aggregate_prices(u);
  sol.powers.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (free[i]) sol.powers[i] = water_filling_power(instance, i, zeta[i]);
  }
  Slacks slack = constraint_slacks(d, sol.powers, u);
  if (slack.violation > 1e-10) {
    const Slacks fallback = constraint_slacks(d, ipm_powers, u);
    if (fallback.violation < slack.violation) {
      sol.powers = ipm_powers;
      slack = fallback;
    }
  }
  sol.max_violation = slack.violation;
  sol.slackness_residual = slack.slackness;

  for (std::size_t i = 0; i < n; ++i) {
    sol.objective += d.weight[i] * std::log1p(d.gain[i] * sol.powers[i]);
    const double f0 = d.marginal(i, 0.0);
    const double r = sol.powers[i] > 0.0 ? std::abs(d.marginal(i, sol.powers[i]) - zeta[i])
                                         : std::max(0.0, f0 - zeta[i]);
    sol.kkt_residual = std::max(sol.kkt_residual, r / f0);
  }
  (void)tol;
  return sol;
}

double lagrangian_value(std::span<const double> powers, const Multipliers& u, std::span<const std::uint8_t> i_h,
                        const OfflineInstance& instance) {
  const SlotData d(i_h, instance);
  const std::size_t n = d.n;
  double value = 0.0;
  for (std::size_t i = 0; i < n; ++i) value += d.weight[i] * std::log1p(d.gain[i] * powers[i]);
  for (std::size_t j = 0; j < n; ++j) value += u.mu[j] * (d.pmax - powers[j]);
  for (std::size_t j = 0; j < n; ++j) value += u.lambda[j] * ((1.0 - i_h[j]) * d.big_m[j] - powers[j]);
  double cum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    cum += powers[j];
    value += u.nu[j] * (d.prefix_rhs[j] - cum);
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t l = 0; l <= j; ++l) {
      double used = 0.0;
      for (std::size_t i = l; i <= j; ++i) used += powers[i];
      value += u.beta(j, l) * (d.window_rhs(j, l) - used);
    }
  }
  return value;
}

double BendersCut::value(std::span<const std::uint8_t> i_h) const {
  double v = constant;
  for (std::size_t i = 0; i < coefficients.size(); ++i) {
    if (i_h[i]) v += coefficients[i];
  }
  return v;
}

double BendersCut::value(std::uint64_t mask) const {
  double v = constant;
  for (std::size_t i = 0; i < coefficients.size(); ++i) {
    if ((mask >> i) & 1U) v += coefficients[i];
  }
  return v;
}

BendersCut make_cut(const PrimalSolution& sol, const OfflineInstance& instance) {
  const std::size_t n = instance.size();
  const HarvestVector none(n, 0);
  const SlotData d(none, instance);
  const Multipliers& u = sol.duals;
  const double eta = instance.params.efficiency;

  BendersCut cut;
  cut.constant = lagrangian_value(sol.powers, u, none, instance);
  cut.coefficients.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Price of energy stored in slot i: every nu/beta constraint whose window contains i.
    double price = 0.0;
    for (std::size_t j = i; j < n; ++j) {
      price += u.nu[j];
      for (std::size_t l = 0; l <= i; ++l) price += u.beta(j, l);
    }
    cut.coefficients[i] = -u.lambda[i] * d.big_m[i] + eta * d.energy[i] * price;
  }
  return cut;
}

std::vector<double> slot_rates(const OfflineInstance& instance, std::span<const double> powers) {
  std::vector<double> out;
  const auto& t = instance.trajectory;
  for (std::size_t i = 0; i < powers.size(); ++i) {
    out.push_back(instantaneous_rate(t.h_ss[i], t.h_ps[i], powers[i], instance.params));
  }
  return out;
}

}  // namespace ehcrn

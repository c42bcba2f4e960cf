#include "ehcrn/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ehcrn::kernels {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double backup(const MdpTensors& mdp, std::size_t s, std::size_t a, double gamma,
                     std::span<const double> v) {
  double expected = 0.0;
  for (const auto& t : mdp.transitions(s, a)) expected += t.prob * v[t.next];
  return mdp.reward(s, a) + gamma * expected;
}

// Subset-sum tables over the low and high halves of the mask bits, so that a
// cut evaluates as (constant + low[m & low_mask]) + high[m >> low_bits].
struct SplitTables {
  std::size_t low_bits;
  std::vector<double> low;
  std::vector<double> high;

  explicit SplitTables(std::span<const double> coef) {
    const std::size_t n = coef.size();
    low_bits = n / 2;
    low = subset_sums(coef.first(low_bits));
    high = subset_sums(coef.subspan(low_bits));
  }

  static std::vector<double> subset_sums(std::span<const double> c) {
    std::vector<double> out(std::size_t{1} << c.size(), 0.0);
    for (std::size_t m = 1; m < out.size(); ++m) {
      const auto bit = static_cast<std::size_t>(std::countr_zero(m));
      out[m] = out[m & (m - 1)] + c[bit];
    }
    return out;
  }

  // Rows of the table share the high half of the mask; the inner loop over the
  // low half is contiguous and vectorizes.
  void min_row(std::span<double> running_min, std::span<const double> shifted_low, std::size_t h) const {
    double* row = running_min.data() + (h << low_bits);
    const double hv = high[h];
    for (std::size_t l = 0; l < shifted_low.size(); ++l) row[l] = std::min(row[l], shifted_low[l] + hv);
  }


  // min_row that also returns the row maximum; four accumulators keep the
  // reduction vectorizable.
  double min_row_max(std::span<double> running_min, std::span<const double> shifted_low, std::size_t h) const {
    double* row = running_min.data() + (h << low_bits);
    const double hv = high[h];
    const std::size_t n = shifted_low.size();
    double acc[4] = {-kInf, -kInf, -kInf, -kInf};
    std::size_t l = 0;
    for (; l + 4 <= n; l += 4) {
      for (std::size_t j = 0; j < 4; ++j) {
        const double v = std::min(row[l + j], shifted_low[l + j] + hv);
        row[l + j] = v;
        acc[j] = v > acc[j] ? v : acc[j];
      }
    }
    for (; l < n; ++l) {
      const double v = std::min(row[l], shifted_low[l] + hv);
      row[l] = v;
      acc[0] = v > acc[0] ? v : acc[0];
    }
    return std::max(std::max(acc[0], acc[1]), std::max(acc[2], acc[3]));
  }

  // First mask attaining the largest row maximum.
  MaskValue locate(std::span<const double> running_min, std::span<const double> row_max) const {
    std::size_t h = 0;
    for (std::size_t k = 1; k < row_max.size(); ++k) {
      if (row_max[k] > row_max[h]) h = k;
    }
    const std::size_t base = h << low_bits;
    std::size_t l = 0;
    while (running_min[base + l] != row_max[h]) ++l;
    return {base + l, row_max[h]};
  }

  std::vector<double> shift_low(double constant) const {
    std::vector<double> out(low.size());
    for (std::size_t l = 0; l < low.size(); ++l) out[l] = constant + low[l];
    return out;
  }
};

void check_cut_size(std::span<double> running_min, std::span<const double> coefficients) {
  if (coefficients.size() >= 63 || running_min.size() != (std::size_t{1} << coefficients.size())) {
    throw std::invalid_argument("cut table size does not match 2^N");
  }
}

}  // namespace

namespace serial {

double bellman_sweep(const MdpTensors& mdp, std::span<const std::uint32_t> policy, double gamma,
                     std::span<const double> v_in, std::span<double> v_out) {
  double diff = 0.0;
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    v_out[s] = backup(mdp, s, policy[s], gamma, v_in);
    diff = std::max(diff, std::abs(v_out[s] - v_in[s]));
  }
  return diff;
}

void action_values(const MdpTensors& mdp, std::span<const double> v, double gamma, std::span<double> q) {
  const std::size_t na = mdp.n_actions();
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    for (std::size_t a = 0; a < na; ++a) q[s * na + a] = backup(mdp, s, a, gamma, v);
  }
}

void accumulate_cut(std::span<double> running_min, double constant, std::span<const double> coefficients) {
  check_cut_size(running_min, coefficients);
  const SplitTables tables(coefficients);
  const std::vector<double> shifted = tables.shift_low(constant);
  for (std::size_t h = 0; h < tables.high.size(); ++h) tables.min_row(running_min, shifted, h);
}

MaskValue accumulate_cut_argmax(std::span<double> running_min, double constant,
                                std::span<const double> coefficients) {
  check_cut_size(running_min, coefficients);
  const SplitTables tables(coefficients);
  const std::vector<double> shifted = tables.shift_low(constant);
  std::vector<double> row_max(tables.high.size());
  for (std::size_t h = 0; h < row_max.size(); ++h) row_max[h] = tables.min_row_max(running_min, shifted, h);
  return tables.locate(running_min, row_max);
}

// Two passes: a vectorizable max reduction, then the first index holding it.
MaskValue argmax(std::span<const double> values) {
  double top = -std::numeric_limits<double>::infinity();
#pragma omp simd reduction(max : top)
  for (std::size_t m = 0; m < values.size(); ++m) top = values[m] > top ? values[m] : top;
  std::size_t at = 0;
  while (at < values.size() && values[at] != top) ++at;
  return {at == values.size() ? 0 : at, top};
}

}  // namespace serial

namespace omp {

double bellman_sweep(const MdpTensors& mdp, std::span<const std::uint32_t> policy, double gamma,
                     std::span<const double> v_in, std::span<double> v_out) {
  double diff = 0.0;
  const auto n = static_cast<std::int64_t>(mdp.n_states());
#pragma omp parallel for schedule(static) reduction(max : diff)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto s = static_cast<std::size_t>(i);
    v_out[s] = backup(mdp, s, policy[s], gamma, v_in);
    diff = std::max(diff, std::abs(v_out[s] - v_in[s]));
  }
  return diff;
}

void action_values(const MdpTensors& mdp, std::span<const double> v, double gamma, std::span<double> q) {
  const std::size_t na = mdp.n_actions();
  const auto n = static_cast<std::int64_t>(mdp.n_states());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto s = static_cast<std::size_t>(i);
    for (std::size_t a = 0; a < na; ++a) q[s * na + a] = backup(mdp, s, a, gamma, v);
  }
}

void accumulate_cut(std::span<double> running_min, double constant, std::span<const double> coefficients) {
  check_cut_size(running_min, coefficients);
  const SplitTables tables(coefficients);
  const std::vector<double> shifted = tables.shift_low(constant);
  const auto rows = static_cast<std::int64_t>(tables.high.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t h = 0; h < rows; ++h) tables.min_row(running_min, shifted, static_cast<std::size_t>(h));
}

MaskValue accumulate_cut_argmax(std::span<double> running_min, double constant,
                                std::span<const double> coefficients) {
  check_cut_size(running_min, coefficients);
  const SplitTables tables(coefficients);
  const std::vector<double> shifted = tables.shift_low(constant);
  std::vector<double> row_max(tables.high.size());
  const auto rows = static_cast<std::int64_t>(row_max.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t h = 0; h < rows; ++h) {
    const auto r = static_cast<std::size_t>(h);
    row_max[r] = tables.min_row_max(running_min, shifted, r);
  }
  return tables.locate(running_min, row_max);
}

MaskValue argmax(std::span<const double> values) {
  const auto n = static_cast<std::int64_t>(values.size());
  double top = -std::numeric_limits<double>::infinity();
#pragma omp parallel for simd schedule(static) reduction(max : top)
  for (std::int64_t i = 0; i < n; ++i) top = values[i] > top ? values[i] : top;
  std::int64_t at = n;
#pragma omp parallel for schedule(static) reduction(min : at)
  for (std::int64_t i = 0; i < n; ++i) {
    if (values[i] == top && i < at) at = i;
  }
  return {at == n ? 0 : static_cast<std::uint64_t>(at), top};
}

}  // namespace omp

}  // namespace ehcrn::kernels

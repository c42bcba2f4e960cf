#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version used by the
// solvers and a serial reference with identical per-element arithmetic, so the
// two agree bit-for-bit; tests and bench/ compare them.

#include <cstdint>
#include <span>

#include "ehcrn/model.hpp"

namespace ehcrn::kernels {

struct MaskValue {
  std::uint64_t mask = 0;
  double value = 0.0;
};

namespace serial {

/// v_out[s] = C(s, pi(s)) + gamma * sum_k T[s,k,pi(s)] v_in[k]; returns max_s |v_out - v_in|.
double bellman_sweep(const MdpTensors& mdp, std::span<const std::uint32_t> policy, double gamma,
                     std::span<const double> v_in, std::span<double> v_out);

/// q[s * n_a + a] = C(s, a) + gamma * sum_k T[s,k,a] v[k].
void action_values(const MdpTensors& mdp, std::span<const double> v, double gamma, std::span<double> q);

/// running_min[m] = min(running_min[m], constant + sum_{bit i of m} coefficients[i]).
void accumulate_cut(std::span<double> running_min, double constant, std::span<const double> coefficients);

/// Largest entry; ties go to the smallest mask.
MaskValue argmax(std::span<const double> values);

/// accumulate_cut then argmax of the updated table, in a single sweep.
MaskValue accumulate_cut_argmax(std::span<double> running_min, double constant,
                                std::span<const double> coefficients);

}  // namespace serial

namespace omp {

double bellman_sweep(const MdpTensors& mdp, std::span<const std::uint32_t> policy, double gamma,
                     std::span<const double> v_in, std::span<double> v_out);
void action_values(const MdpTensors& mdp, std::span<const double> v, double gamma, std::span<double> q);
void accumulate_cut(std::span<double> running_min, double constant, std::span<const double> coefficients);
MaskValue argmax(std::span<const double> values);
MaskValue accumulate_cut_argmax(std::span<double> running_min, double constant,
                                std::span<const double> coefficients);

}  // namespace omp

}  // namespace ehcrn::kernels

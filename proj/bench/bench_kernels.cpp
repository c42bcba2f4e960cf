// Serial versus OpenMP timings for the parallel kernels and the enumeration oracle.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "ehcrn/config.hpp"
#include "ehcrn/kernels.hpp"
#include "ehcrn/offline.hpp"

using namespace ehcrn;

namespace {

double best_of(int reps, const std::function<void()>& f) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-34s serial %10.3f ms   omp %10.3f ms   speedup %5.2fx\n", name, serial * 1e3, parallel * 1e3,
              serial / parallel);
}

}  // namespace

int main() {
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
  const ExperimentConfig c = default_config();
  const StateSpace space(c.params, c.markov, c.battery_step);
  const MdpTensors mdp = build_mdp(c.params, c.markov, space);
  std::vector<double> v(space.size(), 1.0), out(space.size()), q(space.size() * mdp.n_actions());
  std::vector<std::uint32_t> policy(space.size(), 1);

  report("bellman sweep x1000 (408 states)",
         best_of(5, [&] { for (int k = 0; k < 1000; ++k) kernels::serial::bellman_sweep(mdp, policy, 0.9, v, out); }),
         best_of(5, [&] { for (int k = 0; k < 1000; ++k) kernels::omp::bellman_sweep(mdp, policy, 0.9, v, out); }));
  report("action values x1000",
         best_of(5, [&] { for (int k = 0; k < 1000; ++k) kernels::serial::action_values(mdp, v, 0.9, q); }),
         best_of(5, [&] { for (int k = 0; k < 1000; ++k) kernels::omp::action_values(mdp, v, 0.9, q); }));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t n : {16u, 20u, 24u}) {
    std::vector<double> coef(n);
    for (auto& x : coef) x = u(rng);
    std::vector<double> table(std::size_t{1} << n, std::numeric_limits<double>::infinity());
    char label[64];
    std::snprintf(label, sizeof label, "cut + argmax, N = %zu", n);
    report(label, best_of(5, [&] { kernels::serial::accumulate_cut_argmax(table, 0.3, coef); }),
           best_of(5, [&] { kernels::omp::accumulate_cut_argmax(table, 0.3, coef); }));
  }

  const OfflineInstance inst{sample_trajectory(c.markov, 12, 3), c.params};
  report("brute-force enumeration, N = 12", best_of(2, [&] { brute_force_offline(inst, 1e-8, false); }),
         best_of(2, [&] { brute_force_offline(inst, 1e-8, true); }));
  const OfflineInstance big{sample_trajectory(c.markov, 20, 3), c.params};
  GbdOptions serial_opt, omp_opt;
  serial_opt.parallel = false;
  report("GBD, N = 20", best_of(2, [&] { try { gbd(big, serial_opt); } catch (const GbdIterationLimit&) {} }),
         best_of(2, [&] { try { gbd(big, omp_opt); } catch (const GbdIterationLimit&) {} }));
  return 0;
}

#include "ehcrn/rng.hpp"

#include <numeric>

namespace ehcrn {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

double uniform01(Rng& rng) {
  // 53 random mantissa bits; avoids implementation-defined distribution objects
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t sample_categorical(std::span<const double> probs, Rng& rng) {
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

std::size_t uniform_index(std::size_t n, Rng& rng) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

}  // namespace ehcrn

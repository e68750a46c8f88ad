#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace equal {

// splitmix64 step; chained to derive independent stream seeds from one root
// seed so that adding a consumer never perturbs existing streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

// Deterministic RNG. All sampling is built directly on the (standardized)
// mt19937_64 bit stream so results are reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  // Box-Muller on the uniform stream.
  double normal(double mean = 0.0, double stddev = 1.0);

  // [0, n), unbiased via rejection.
  std::size_t uniform_index(std::size_t n);

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace equal

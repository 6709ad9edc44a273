#pragma once

#include "cfgp/types.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace cfgp {

/// splitmix64 step; used to derive independent child seeds from a master
/// seed so that concurrent work items get decorrelated streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master ^ (0xD1B54A32D192ED03ULL * (index + 1));
  return splitmix64(s);
}

/// Deterministic RNG wrapper.  mt19937_64 output is fully specified by the
/// standard, and the distributions below are implemented here rather than
/// taken from <random> so that streams are reproducible across standard
/// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0,1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int n) {  // in [0, n)
    return static_cast<int>(static_cast<std::uint64_t>(n) * uniform());
  }

  /// Standard normal via Box-Muller (cached second deviate).
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = 0.0;
    do { u1 = uniform(); } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  /// Fisher-Yates shuffle of 0..n-1.
  std::vector<int> permutation(int n) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    for (int i = n - 1; i > 0; --i) {
      const int j = uniform_int(i + 1);
      std::swap(p[i], p[j]);
    }
    return p;
  }

 private:
  std::mt19937_64 gen_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

/// Halton low-discrepancy sequence with a seeded Cranley-Patterson rotation.
/// Deterministic given (dim, seed); index 0 of the raw sequence is skipped.
class Halton {
 public:
  Halton(int dim, std::uint64_t seed);

  /// Point #index (index >= 0) in [0,1)^dim.
  Vec point(std::int64_t index) const;

  /// Rows 0..n-1 as an n x dim matrix.
  Mat points(int n) const;

 private:
  int dim_;
  std::vector<int> primes_;
  Vec shift_;
};

double halton_radical_inverse(std::int64_t n, int base);

}  // namespace cfgp

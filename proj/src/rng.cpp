#include "cfgp/rng.hpp"

#include <cmath>

namespace cfgp {

double halton_radical_inverse(std::int64_t n, int base) {
  double q = 0.0;
  double bk = 1.0 / base;
  while (n > 0) {
    q += static_cast<double>(n % base) * bk;
    n /= base;
    bk /= base;
  }
  return q;
}

namespace {

std::vector<int> first_primes(int count) {
  std::vector<int> out;
  int candidate = 2;
  while (static_cast<int>(out.size()) < count) {
    bool prime = true;
    for (int d = 2; d * d <= candidate; ++d) {
      if (candidate % d == 0) { prime = false; break; }
    }
    if (prime) out.push_back(candidate);
    ++candidate;
  }
  return out;
}

}  // namespace

Halton::Halton(int dim, std::uint64_t seed) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("Halton dimension must be >= 1");
  primes_ = first_primes(dim);
  shift_.resize(dim);
  Rng rng(derive_seed(seed, 0x48414C54ULL));
  for (int k = 0; k < dim; ++k) shift_[k] = rng.uniform();
}

Vec Halton::point(std::int64_t index) const {
  Vec p(dim_);
  for (int k = 0; k < dim_; ++k) {
    double v = halton_radical_inverse(index + 1, primes_[k]) + shift_[k];
    v -= std::floor(v);
    p[k] = v;
  }
  return p;
}

Mat Halton::points(int n) const {
  Mat out(n, dim_);
  for (int i = 0; i < n; ++i) out.row(i) = point(i).transpose();
  return out;
}

}  // namespace cfgp

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "epinp/errors.hpp"

namespace epinp {

namespace detail {

// Finalizer from SplitMix64 (Stafford mix 13).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based generator: the state is a counter advanced by a fixed odd
// increment and the output is a hash of the counter.  Streams are keyed by
// (seed, stream), so any stochastic operation given the same pair replays
// bit-identically, and sibling streams (parallel chains, nested draws) never
// share state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t a = detail::mix64(seed + 0x9e3779b97f4a7c15ULL);
    std::uint64_t b = detail::mix64(a ^ (stream + 0x6a09e667f3bcc909ULL));
    counter_ = b;
    gamma_ = detail::mix64(b + 0xe7037ed1a0b428dbULL) | 1ULL;
  }

  // Independent child stream; deterministic function of (this stream, key).
  Rng split(std::uint64_t key) const {
    Rng child(counter_ ^ detail::mix64(key + 0xbb67ae8584caa73bULL), key);
    return child;
  }

  std::uint64_t next_u64() {
    counter_ += gamma_;
    return detail::mix64(counter_);
  }

  // Uniform on the open interval (0, 1): values (k + 0.5) / 2^53.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Uniform on {0, ..., n-1}, unbiased via rejection.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw UsageError("uniform_index: n must be positive");
    std::uint64_t threshold = (0ULL - n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via Box-Muller; two uniforms per draw, no cached spare.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double exponential(double rate) {
    if (!(rate > 0)) throw UsageError("exponential: rate must be positive");
    return -std::log(uniform()) / rate;
  }

  // Marsaglia-Tsang squeeze method.
  double gamma(double shape, double rate) {
    if (!(shape > 0) || !(rate > 0))
      throw UsageError("gamma: shape and rate must be positive");
    if (shape < 1.0) {
      double g = gamma(shape + 1.0, 1.0);
      double u = uniform();
      return g * std::pow(u, 1.0 / shape) / rate;
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return d * v / rate;
    }
  }

  double beta(double a, double b) {
    double x = gamma(a, 1.0);
    double y = gamma(b, 1.0);
    return x / (x + y);
  }

  // Support {1, 2, ...} with pmf p (1-p)^{k-1}.
  long long geometric(double p) {
    if (!(p > 0.0) || !(p <= 1.0))
      throw UsageError("geometric: p must be in (0, 1]");
    if (p >= 1.0) return 1;
    double u = uniform();
    double k = std::floor(std::log(u) / std::log1p(-p));
    if (k > 1e18) return static_cast<long long>(1e18);
    return 1 + static_cast<long long>(k);
  }

  int binomial(int n, double p) {
    if (n < 0 || p < 0.0 || p > 1.0) throw UsageError("binomial: bad arguments");
    int c = 0;
    for (int k = 0; k < n; ++k)
      if (uniform() < p) ++c;
    return c;
  }

 private:
  std::uint64_t counter_ = 0;
  std::uint64_t gamma_ = 1;
};

}  // namespace epinp

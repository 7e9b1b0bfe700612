#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ag {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

// mt19937_64 engine with hand-rolled samplers. The standard distribution
// objects are implementation-defined, which would break the byte-identical
// artifact contract across toolchains; the engine itself is pinned by the
// standard.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Independent stream derived from (seed, stream id); insensitive to the
  // order users are processed in.
  static Rng substream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(splitmix64(seed ^ splitmix64(stream + 0x51ed2701)));
  }

  std::uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Unbiased integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % n;
  }

  // Standard normal via Box-Muller (one value per call; no cached state).
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Marsaglia-Tsang; shape > 0, unit scale.
  double gamma(double alpha) {
    if (alpha < 1.0) {
      const double u = uniform01();
      return gamma(alpha + 1.0) * std::pow(u > 0 ? u : 1e-300, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  int poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    if (lambda < 30.0) {
      const double limit = std::exp(-lambda);
      int k = 0;
      double p = 1.0;
      do {
        ++k;
        p *= uniform01();
      } while (p > limit);
      return k - 1;
    }
    const double v = std::floor(normal(lambda, std::sqrt(lambda)) + 0.5);
    return v < 0 ? 0 : static_cast<int>(v);
  }

  // Weights need not be normalized; returns index in [0, n).
  int categorical(const double* w, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += w[i];
    double u = uniform01() * total;
    for (int i = 0; i < n; ++i) {
      u -= w[i];
      if (u < 0.0) return i;
    }
    return n - 1;
  }

  void dirichlet(const std::vector<double>& alpha, std::vector<double>& out) {
    out.resize(alpha.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      out[i] = alpha[i] > 0 ? gamma(alpha[i]) : 0.0;
      sum += out[i];
    }
    if (sum <= 0.0) return;
    for (double& v : out) v /= sum;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace ag

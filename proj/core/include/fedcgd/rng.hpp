#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace fedcgd {

// Deterministic random source. The engine is std::mt19937_64 (its output
// sequence is pinned by the standard); all distributions are implemented
// here instead of using std::*_distribution, whose algorithms vary across
// standard libraries. Two builds of this code therefore produce identical
// streams for identical seeds.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { reseed(seed); }

  // Derives an independent stream from a master seed and up to three
  // stream tags (e.g. concern, round, device). Simulation code never
  // shares one stream across concerns; it derives one per (tag...) so
  // that execution order cannot change the draws.
  static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                    std::uint64_t c = 0) {
    std::uint64_t s = seed;
    s = splitmix(s) ^ (a * 0x9E3779B97F4A7C15ULL);
    s = splitmix(s) ^ (b * 0xBF58476D1CE4E5B9ULL);
    s = splitmix(s) ^ (c * 0x94D049BB133111EBULL);
    return Rng(splitmix(s));
  }

  std::uint64_t next() { return eng_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1); never returns an exact endpoint.
  double uniform_open() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive on both ends; unbiased via rejection sampling.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  int uniform_int(int lo, int hi) {
    if (lo > hi) throw std::invalid_argument("Rng::uniform_int: empty range");
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller without the cached spare, so each call consumes exactly two
  // engine draws regardless of history.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Marsaglia-Tsang; valid for any shape > 0, scale 1.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("Rng::gamma: shape must be > 0");
    if (shape < 1.0) {
      const double u = uniform_open();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // log of a Gamma(shape, 1) sample; stays finite for shapes far below 1,
  // where the sample itself underflows to zero.
  double log_gamma_sample(double shape) {
    if (!(shape > 0.0))
      throw std::invalid_argument("Rng::log_gamma_sample: shape must be > 0");
    if (shape < 1.0) {
      const double u = uniform_open();
      return log_gamma_sample(shape + 1.0) + std::log(u) / shape;
    }
    return std::log(gamma(shape));
  }

  // Dirichlet sample computed in log space so that tiny concentration
  // parameters do not collapse the whole vector to zeros.
  std::vector<double> dirichlet(std::span<const double> alpha) {
    if (alpha.empty()) throw std::invalid_argument("Rng::dirichlet: empty alpha");
    std::vector<double> lg(alpha.size());
    double max_lg = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      lg[i] = log_gamma_sample(alpha[i]);
      max_lg = std::max(max_lg, lg[i]);
    }
    std::vector<double> out(alpha.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      out[i] = std::exp(lg[i] - max_lg);
      sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct values from {0, ..., n-1}, in draw order.
  std::vector<int> sample_without_replacement(int n, int k) {
    if (k > n || k < 0) throw std::invalid_argument("sample_without_replacement: k out of range");
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < k; ++i) {
      const int j = i + static_cast<int>(below(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(k));
    return pool;
  }

 private:
  void reseed(std::uint64_t seed) {
    std::uint64_t s = seed;
    std::uint32_t w[8];
    for (int i = 0; i < 4; ++i) {
      const std::uint64_t x = splitmix(s);
      w[2 * i] = static_cast<std::uint32_t>(x);
      w[2 * i + 1] = static_cast<std::uint32_t>(x >> 32);
    }
    std::seed_seq seq(std::begin(w), std::end(w));
    eng_.seed(seq);
  }

  static std::uint64_t splitmix(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 eng_;
};

// Stream tags for Rng::derive. Keeping every concern on its own stream is
// what makes per-round results independent of evaluation order.
namespace stream {
inline constexpr std::uint64_t kPlacement = 1;
inline constexpr std::uint64_t kData = 2;
inline constexpr std::uint64_t kAvailability = 3;
inline constexpr std::uint64_t kShadow = 4;
inline constexpr std::uint64_t kLocalUpdate = 5;
inline constexpr std::uint64_t kSolver = 6;
inline constexpr std::uint64_t kBench = 7;
}  // namespace stream

}  // namespace fedcgd

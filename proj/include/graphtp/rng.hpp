#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace graphtp {

// Sub-seeding tags. A subsystem stream is Rng(seed ^ tag), optionally mixed
// with an epoch or repetition counter through Rng::derive.
namespace rng_tag {
inline constexpr std::uint64_t kInit = 0x1b873593a3c4d1e5ULL;
inline constexpr std::uint64_t kPerturbView1 = 0x5bd1e9955bd1e995ULL;
inline constexpr std::uint64_t kPerturbView2 = 0xc2b2ae3d27d4eb4fULL;
inline constexpr std::uint64_t kKMeans = 0x165667b19e3779f9ULL;
inline constexpr std::uint64_t kFilter = 0x27d4eb2f165667c5ULL;
inline constexpr std::uint64_t kSplit = 0x85ebca6bc2b2ae35ULL;
inline constexpr std::uint64_t kProbe = 0x9e3779b97f4a7c15ULL;
inline constexpr std::uint64_t kSbm = 0xff51afd7ed558ccdULL;
inline constexpr std::uint64_t kClustering = 0xc4ceb9fe1a85ec53ULL;
inline constexpr std::uint64_t kShuffle = 0x4cf5ad432745937fULL;
}  // namespace rng_tag

/// Seedable generator over mt19937_64. Distributions are computed here
/// rather than through <random>'s distribution objects, whose output is
/// implementation-defined, so streams are identical across standard
/// libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  /// Stream for subsystem `tag`, step `counter` (epoch, repetition, ...).
  static Rng derive(std::uint64_t seed, std::uint64_t tag, std::uint64_t counter = 0) {
    return Rng(seed ^ tag ^ mix(counter));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller, caching the second variate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  /// True with probability p.
  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace graphtp

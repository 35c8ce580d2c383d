#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lrpq {

/// splitmix64 step; used to derive independent substream seeds from one
/// master seed so replications stay identical under any worker count.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s ^= stream * 0x9e3779b97f4a7c15ULL;
  std::uint64_t b = splitmix64(s);
  s ^= index * 0xc2b2ae3d27d4eb4fULL;
  std::uint64_t c = splitmix64(s);
  return a ^ (b << 1) ^ c;
}

/// Samplers built on raw mt19937_64 uniforms. std::*_distribution algorithms
/// are implementation-defined; these are pinned so draws reproduce exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform on (0,1), safe for logs.
  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return u;
  }

  /// Box-Muller; caches the second deviate.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform_pos();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * pi_ * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double var) { return mean + std::sqrt(var) * normal(); }

  /// Student t with 3 degrees of freedom: Z / sqrt(chi2_3 / 3).
  double student_t3() {
    double z = normal();
    double c = normal();
    double d = normal();
    double e = normal();
    return z / std::sqrt((c * c + d * d + e * e) / 3.0);
  }

  /// Gamma with integer shape k: minus log of a product of k uniforms.
  double gamma_int(int k) {
    double acc = 0.0;
    for (int i = 0; i < k; ++i) acc += std::log(uniform_pos());
    return -acc;
  }

  double beta_int(int a, int b) {
    double x = gamma_int(a);
    double y = gamma_int(b);
    return x / (x + y);
  }

  /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  static constexpr double pi_ = 3.141592653589793238462643383279502884;
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lrpq

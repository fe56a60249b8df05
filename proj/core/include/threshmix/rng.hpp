#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace threshmix {

/// Deterministic random stream. A thin wrapper over std::mt19937_64 that
/// derives uniforms and normals itself, so every draw in the library is a
/// fixed function of the seed (std::*_distribution front-ends are
/// implementation-defined and would break chain reproducibility).
///
/// A stream is owned by exactly one chain / execution context at a time.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  /// Uniform on the open interval (0,1); never returns 0 or 1, so logs and
  /// quantile transforms are always finite.
  double uniform01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * kInv53;
  }

  /// Standard normal via the Marsaglia polar method (pairs cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

 private:
  static constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53

  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace threshmix

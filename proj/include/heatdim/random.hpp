#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace heatdim {

/// Seeded generator for every randomized fixture. Doubles are built from the raw
/// 64-bit stream (53 high bits) so sequences do not depend on the standard library's
/// distribution implementations.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal by Box–Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
};

inline double SeededRng::normal() {
  double u = uniform();
  while (u <= 0.0) u = uniform();
  const double v = uniform();
  return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586 * v);
}

}  // namespace heatdim

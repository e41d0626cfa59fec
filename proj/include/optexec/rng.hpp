#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace optexec {

/// Counter-based stream: the k-th draw is a pure function of (key, k), so any
/// path's stream can be reconstructed without generating the others.
class CounterStream {
 public:
  CounterStream(std::uint64_t master_seed, std::uint64_t path, std::uint64_t channel)
      : key_(mix(master_seed ^ mix(path + 0x632be59bd9b4e019ULL) ^ mix(channel + 0x9e3779b97f4a7c15ULL))) {}

  std::uint64_t next_u64() { return mix(key_ + (counter_++) * kGolden); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; consumes two draws per pair.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace optexec

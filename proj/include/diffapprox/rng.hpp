#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace diffapprox {

/// SplitMix64 finalizer (Steele, Lea & Flood; constants from Vigna's splitmix64.c).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of replica k: splitmix64_mix(master_seed ^ k).
constexpr std::uint64_t replica_seed(std::uint64_t master_seed, std::uint64_t k) noexcept {
  return splitmix64_mix(master_seed ^ k);
}

/// Random stream owned by a single replica.
///
/// Draw counts are fixed per call: uniform() and exponential() consume one
/// 64-bit word, normal_pair() consumes two.
class ReplicaStream {
 public:
  explicit ReplicaStream(std::uint64_t seed) : engine_(seed) {}

  static ReplicaStream for_replica(std::uint64_t master_seed, std::uint64_t k) {
    return ReplicaStream(replica_seed(master_seed, k));
  }

  // Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

  // Box-Muller; returns two independent standard normals.
  std::pair<double, double> normal_pair() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  // Fills out with standard normals using ceil(size/2) Box-Muller pairs.
  void normals(std::span<double> out) noexcept {
    std::size_t i = 0;
    for (; i + 1 < out.size(); i += 2) {
      const auto [a, b] = normal_pair();
      out[i] = a;
      out[i + 1] = b;
    }
    if (i < out.size()) out[i] = normal_pair().first;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace diffapprox

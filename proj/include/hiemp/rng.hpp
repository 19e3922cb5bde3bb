#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace hiemp {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeded random stream. Every draw goes through a freshly constructed
/// distribution so the stream state is the engine alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(splitmix64(seed)) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  double normal(double mean, double stddev) {
    if (stddev <= 0.0) return mean;
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Independent stream `index` derived from `base`; used to give each parallel
/// work item its own generator so results do not depend on scheduling.
inline Rng stream_rng(std::uint64_t base, std::uint64_t index) {
  return Rng(splitmix64(base) ^ splitmix64(index * 0x2545f4914f6cdd1dULL + 1));
}

}  // namespace hiemp

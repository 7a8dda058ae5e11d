#pragma once

#include <cstdint>
#include <random>

namespace snakesim {

/// Seeded random stream. Every replicate owns one; streams are derived
/// deterministically from (seed, replicate, stream id) so results never
/// depend on which worker ran the replicate.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t replicate, std::uint64_t stream = 0);
  explicit Rng(std::uint64_t seed) : Rng(seed, 0, 0) {}

  double uniform() { return uniform_(engine_); }
  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }

  // Number of failures before the first success, success probability p.
  std::int64_t geometric(double p) {
    return std::geometric_distribution<std::int64_t>(p)(engine_);
  }

  bool bernoulli(double p) { return uniform_(engine_) < p; }

  std::mt19937_64& engine() { return engine_; }

  // Stream ids used inside one replicate.
  static constexpr std::uint64_t kDynamics = 0;
  static constexpr std::uint64_t kEnvironment = 1;
  static constexpr std::uint64_t kAuxiliary = 2;

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace snakesim

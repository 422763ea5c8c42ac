#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace argbot {

// Seeded random stream with platform-independent draws.
//
// std::*_distribution output is implementation-defined, so every draw that
// feeds reproducible artifacts (condition assignment, argument selection,
// simulated agents) goes through these helpers instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Mixes a base seed with a tag and an id into an independent stream seed.
  static std::uint64_t derive(std::uint64_t seed, std::string_view tag, std::uint64_t id = 0);
  static Rng stream(std::uint64_t seed, std::string_view tag, std::uint64_t id = 0) {
    return Rng(derive(seed, tag, id));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  bool bernoulli(double p) { return uniform01() < p; }
  std::uint64_t poisson(double mean);
  double exponential(double mean);
  double normal(double mean = 0.0, double sd = 1.0);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace argbot

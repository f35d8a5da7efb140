#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

#include <Eigen/Dense>

namespace rpchol {

// splitmix64 finalizer; used to turn nearby integer seeds into unrelated
// engine states.
std::uint64_t mix_seed(std::uint64_t x);

// Seed for an independent stream derived from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Seeded generator: std::mt19937_64 initialised from mix_seed(seed). Uniform
// draws use the top 53 bits of one engine output, so the uniform sequence is
// fixed by the standard; normal draws go through std::normal_distribution and
// are reproducible within one build only.
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1).
  double uniform();
  double normal();
  // Uniform in {0, ..., n-1}; n must be positive.
  std::size_t uniform_index(std::size_t n);

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

// Draws i with probability weights[i] / sum(weights) by inverting the
// cumulative sum at one uniform draw. Non-positive weights are never chosen.
// Throws NoValidPivot when no weight is positive.
std::size_t weighted_sample(std::span<const double> weights, Rng& rng);

// Haar-distributed orthogonal matrix: QR of an iid standard normal matrix with
// the signs of diag(R) folded into Q.
Eigen::MatrixXd random_orthogonal(std::size_t n, Rng& rng);

} // namespace rpchol

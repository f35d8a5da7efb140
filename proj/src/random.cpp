#include "rpchol/random.hpp"

#include <cmath>

#include "rpchol/errors.hpp"

namespace rpchol {

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix_seed(master ^ mix_seed(stream + 0xD1B54A32D192ED03ULL));
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(mix_seed(seed)) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() { return normal_(engine_); }

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw InvalidParameter("uniform_index: empty range");
  const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return i < n ? i : n - 1;
}

std::size_t weighted_sample(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  std::size_t last_positive = weights.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    if (std::isnan(w) || std::isinf(w)) throw InvalidParameter("weighted_sample: non-finite weight");
    if (w > 0.0) {
      total += w;
      last_positive = i;
    }
  }
  if (last_positive == weights.size()) throw NoValidPivot("weighted_sample: no positive weight");

  const double target = rng.uniform() * total;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cumulative += weights[i];
    if (target < cumulative) return i;
  }
  // Round-off put target at the very top of the range.
  return last_positive;
}

Eigen::MatrixXd random_orthogonal(std::size_t n, Rng& rng) {
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd g(m, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < m; ++i) g(i, j) = rng.normal();

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < m; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

} // namespace rpchol

#include "rpchol/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rpchol/errors.hpp"
#include "rpchol/generators.hpp"

namespace rpchol::sweep {

namespace {

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

std::vector<double> distinct_positive(std::size_t count, Rng& rng) {
  std::vector<double> v(count);
  for (double& x : v) x = uniform(rng, 0.1, 10.0);
  return v;
}

} // namespace

Kind kind_for(std::size_t index) { return static_cast<Kind>(index % kKindCount); }

std::string to_string(Kind kind) {
  switch (kind) {
  case Kind::Spread: return "spread";
  case Kind::MultiScale: return "multiscale";
  case Kind::PowerLaw: return "powerlaw";
  case Kind::RankDeficient: return "rankdeficient";
  case Kind::ZeroRows: return "zerorows";
  case Kind::Wishart: return "wishart";
  case Kind::Diagonal: return "diagonal";
  }
  return "?";
}

SpdMatrix random_psd(std::size_t n, Kind kind, Rng& rng) {
  if (n == 0) throw InvalidParameter("random_psd: n must be positive");
  switch (kind) {
  case Kind::Spread: {
    std::vector<double> ev(n);
    for (double& x : ev) x = uniform(rng, 0.0, 10.0);
    return random_spd_spectrum(ev, rng);
  }
  case Kind::MultiScale: {
    std::vector<double> ev(n);
    for (double& x : ev) x = std::pow(10.0, uniform(rng, -3.0, 3.0));
    return random_spd_spectrum(ev, rng);
  }
  case Kind::PowerLaw: {
    const double gamma = uniform(rng, 0.5, 3.0);
    const double c = uniform(rng, 0.1, 100.0);
    return random_spd_spectrum(n, [&](std::size_t i) { return c * std::pow(static_cast<double>(i), -gamma); }, rng);
  }
  case Kind::RankDeficient: {
    if (n < 3) return random_psd(n, Kind::Spread, rng);
    const std::size_t rank = 2 + rng.uniform_index(n - 2);
    std::vector<double> ev = distinct_positive(rank, rng);
    ev.resize(n, 0.0);
    return random_spd_spectrum(ev, rng);
  }
  case Kind::ZeroRows: {
    if (n < 3) return random_psd(n, Kind::Diagonal, rng);
    const std::size_t zeros = 1 + rng.uniform_index(n / 2);
    const std::size_t m = n - zeros;
    const SpdMatrix block = random_spd_spectrum(distinct_positive(m, rng), rng);
    std::vector<std::size_t> slots(n);
    std::iota(slots.begin(), slots.end(), 0);
    // Fisher-Yates; the first m slots host the block.
    for (std::size_t i = n - 1; i > 0; --i) std::swap(slots[i], slots[rng.uniform_index(i + 1)]);
    std::sort(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(m));
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        a(static_cast<Eigen::Index>(slots[i]), static_cast<Eigen::Index>(slots[j])) = block(i, j);
    return SpdMatrix::from_dense(a, 0.0);
  }
  case Kind::Wishart: {
    const std::size_t r = 2 + rng.uniform_index(2 * n - 1);
    Eigen::MatrixXd g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(r));
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
    return SpdMatrix::from_dense(g * g.transpose() / static_cast<double>(r), 1e-10);
  }
  case Kind::Diagonal: return SpdMatrix::diagonal(random_diagonal(n, rng));
  }
  throw InvalidParameter("random_psd: unknown kind");
}

std::vector<double> random_diagonal(std::size_t n, Rng& rng) {
  std::vector<double> d(n);
  for (double& x : d) x = rng.uniform() < 0.2 ? 0.0 : uniform(rng, 0.0, 5.0);
  if (std::all_of(d.begin(), d.end(), [](double x) { return x <= 0.0; })) d[rng.uniform_index(n)] = 1.0;
  return d;
}

analysis::PivotDistribution random_distribution(const SpdMatrix& a, Rng& rng) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a(i, i);
  const std::vector<std::size_t> active = active_set(d);
  if (active.empty()) throw InvalidInput("random_distribution: matrix has no active diagonal");

  std::vector<double> w(a.size(), 0.0);
  switch (rng.uniform_index(4)) {
  case 0:
    for (std::size_t i : active) w[i] = rng.uniform();
    break;
  case 1:
    for (std::size_t i : active)
      if (rng.uniform() < 0.4) w[i] = rng.uniform();
    break;
  case 2: w[active[rng.uniform_index(active.size())]] = 1.0; break;
  default: return analysis::PivotDistribution::diag_power(a, uniform(rng, 0.0, 4.0));
  }
  if (std::all_of(w.begin(), w.end(), [](double x) { return x <= 0.0; })) w[active.front()] = 1.0;
  return analysis::PivotDistribution::from_weights(a, w);
}

} // namespace rpchol::sweep

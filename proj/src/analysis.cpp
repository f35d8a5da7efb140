#include "rpchol/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rpchol/errors.hpp"

namespace rpchol::analysis {

namespace {

using Index = Eigen::Index;

std::vector<double> diagonal_of(const SpdMatrix& a) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a(i, i);
  return d;
}

// B = A - a_i a_i^T / A_ii, formed explicitly.
Eigen::MatrixXd downdate(const SpdMatrix& a, std::size_t i) {
  const Eigen::VectorXd col = a.row(i);
  return a.dense() - (col * col.transpose()) / a(i, i);
}

void require_active(const SpdMatrix& a, std::size_t i, double active_tol) {
  if (!is_active(diagonal_of(a), i, active_tol)) {
    std::ostringstream msg;
    msg << "index " << i << " has diagonal " << (i < a.size() ? a(i, i) : 0.0) << " outside the active set";
    throw InvalidParameter(msg.str());
  }
}

void require_positive_diagonal(const SpdMatrix& a) {
  if (active_set(diagonal_of(a)).empty()) throw InvalidInput("matrix has no positive diagonal entry");
}

} // namespace

PivotDistribution PivotDistribution::from_probabilities(const SpdMatrix& a, std::vector<double> p, double active_tol) {
  if (p.size() != a.size()) throw InvalidParameter("distribution size does not match the matrix");
  const std::vector<double> d = diagonal_of(a);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i]) || p[i] < 0.0) throw InvalidParameter("probabilities must be finite and non-negative");
    if (p[i] > 0.0 && !is_active(d, i, active_tol)) {
      std::ostringstream msg;
      msg << "pivot distribution puts mass " << p[i] << " on index " << i << " whose diagonal " << d[i]
          << " is not active";
      throw InvalidParameter(msg.str());
    }
    total += p[i];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "probabilities sum to " << total << ", not 1";
    throw InvalidParameter(msg.str());
  }
  return PivotDistribution(std::move(p));
}

PivotDistribution PivotDistribution::from_weights(const SpdMatrix& a, std::span<const double> weights, double active_tol) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw InvalidParameter("weights must have positive total");
  std::vector<double> p(weights.begin(), weights.end());
  for (double& v : p) v /= total;
  return from_probabilities(a, std::move(p), active_tol);
}

PivotDistribution PivotDistribution::diag_power(const SpdMatrix& a, double beta, double active_tol) {
  if (std::isnan(beta) || beta < 0.0 || std::isinf(beta)) throw InvalidParameter("diag_power needs finite beta >= 0");
  const std::vector<double> d = diagonal_of(a);
  const std::vector<std::size_t> active = active_set(d, active_tol);
  if (active.empty()) throw InvalidInput("matrix has no active diagonal entry");
  double m = 0.0;
  for (std::size_t i : active) m = std::max(m, d[i]);
  std::vector<double> w(d.size(), 0.0);
  for (std::size_t i : active) w[i] = beta == 0.0 ? 1.0 : std::pow(d[i] / m, beta);
  return from_weights(a, w, active_tol);
}

PivotDistribution PivotDistribution::indicator(const SpdMatrix& a, std::size_t i, double active_tol) {
  if (i >= a.size()) throw InvalidParameter("indicator index out of range");
  std::vector<double> p(a.size(), 0.0);
  p[i] = 1.0;
  return from_probabilities(a, std::move(p), active_tol);
}

BoundReport BoundReport::make(std::vector<std::pair<std::string, double>> chain, double scale, double rel_tol) {
  BoundReport r;
  r.chain = std::move(chain);
  r.scale = scale;
  for (std::size_t j = 0; j + 1 < r.chain.size(); ++j) {
    const double lhs = r.chain[j].second;
    const double rhs = r.chain[j + 1].second;
    r.slack.push_back(rhs - lhs);
    r.satisfied.push_back(lhs <= rhs + rel_tol * scale);
  }
  return r;
}

bool BoundReport::all_satisfied() const {
  return std::all_of(satisfied.begin(), satisfied.end(), [](bool b) { return b; });
}

double BoundReport::worst_relative_slack() const {
  double worst = std::numeric_limits<double>::infinity();
  const double s = scale > 0.0 ? scale : 1.0;
  for (double v : slack) worst = std::min(worst, v / s);
  return worst;
}

double cube_diagonal(const SpdMatrix& a, std::size_t i) {
  const Eigen::VectorXd col = a.row(i);
  return col.dot(a.dense() * col);
}

double lemma1_expected_frobenius(const SpdMatrix& a, const PivotDistribution& p) {
  if (p.size() != a.size()) throw InvalidParameter("distribution size does not match the matrix");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (p[i] == 0.0) continue;
    const double aii = a(i, i);
    const double row_sq = a.row_norm_sq(i);
    sum += p[i] * (row_sq * row_sq / (aii * aii) - 2.0 * cube_diagonal(a, i) / aii);
  }
  return frobenius_norm_sq(a) + sum;
}

Expectation enumerate_expected(const SpdMatrix& a, const PivotDistribution& p) {
  if (p.size() != a.size()) throw InvalidParameter("distribution size does not match the matrix");
  const auto n = static_cast<Index>(a.size());
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(n, n);
  Expectation out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (p[i] == 0.0) continue;
    const Eigen::MatrixXd b = downdate(a, i);
    expected += p[i] * b;
    out.frobenius_sq += p[i] * b.squaredNorm();
    out.trace += p[i] * b.trace();
  }
  out.expected_residual = SpdMatrix::from_dense(expected, 1e-10);
  return out;
}

SpdMatrix beta1_expected_residual(const SpdMatrix& a) {
  const double t = trace(a);
  if (!(t > 0.0)) throw InvalidInput("beta1_expected_residual: trace must be positive");
  return SpdMatrix::from_dense(a.dense() - (a.dense() * a.dense()) / t, 1e-10);
}

double expected_trace_identity(const SpdMatrix& a) {
  const double t = trace(a);
  if (!(t > 0.0)) throw InvalidInput("expected_trace_identity: trace must be positive");
  // tr(A^2) = |A|_F^2 for symmetric A.
  return (1.0 - frobenius_norm_sq(a) / (t * t)) * t;
}

double lemma2_gap(const SpdMatrix& a, std::size_t i) {
  if (i >= a.size()) throw InvalidParameter("lemma2_gap: index out of range");
  const double row_sq = a.row_norm_sq(i);
  return a(i, i) * cube_diagonal(a, i) - row_sq * row_sq;
}

double lemma2_scale(const SpdMatrix& a) {
  const double op = operator_norm(a);
  return 1.0 + op * op * op * op;
}

BoundReport theorem1_chain(const SpdMatrix& a) {
  require_positive_diagonal(a);
  const std::size_t n = a.size();
  const double frob = frobenius_norm_sq(a);
  const Expectation e = enumerate_expected(a, PivotDistribution::diag_power(a, 2.0));

  double diag_sq = 0.0;
  double cube_sum = 0.0;
  double row_fourth = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double aii = a(i, i);
    const double row_sq = a.row_norm_sq(i);
    diag_sq += aii * aii;
    cube_sum += aii * cube_diagonal(a, i);
    row_fourth += row_sq * row_sq;
  }
  return BoundReport::make(
      {
          {"expected", e.frobenius_sq},
          {"remark", frob - cube_sum / diag_sq},
          {"first", frob - row_fourth / diag_sq},
          {"uniform", (1.0 - 1.0 / static_cast<double>(n)) * frob},
      },
      frob);
}

BoundReport corollary1_bounds(const SpdMatrix& a, std::size_t i) {
  require_active(a, i, kDefaultActiveTol);
  const double frob = frobenius_norm_sq(a);
  const double aii = a(i, i);
  const double row_sq = a.row_norm_sq(i);
  return BoundReport::make(
      {
          {"actual", downdate(a, i).squaredNorm()},
          {"row_bound", frob - row_sq * row_sq / (aii * aii)},
          {"diag_bound", frob - aii * aii},
      },
      frob);
}

Corollary2Result corollary2_check(const SpdMatrix& a) {
  require_positive_diagonal(a);
  const std::vector<double> d = diagonal_of(a);
  const std::vector<std::size_t> active = active_set(d);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> ratio(a.size(), 0.0);
  for (std::size_t j : active) {
    ratio[j] = a.row_norm_sq(j) / d[j];
    best = std::max(best, ratio[j]);
  }
  std::size_t index = active.front();
  for (std::size_t j : active)
    if (ratio[j] >= best - kTieTol * std::abs(best)) index = j;

  const double frob = frobenius_norm_sq(a);
  Corollary2Result out;
  out.index = index;
  out.report = BoundReport::make(
      {
          {"actual", downdate(a, index).squaredNorm()},
          {"uniform", (1.0 - 1.0 / static_cast<double>(a.size())) * frob},
      },
      frob);
  return out;
}

double diagonal_decay(std::span<const double> d, double beta) {
  if (std::isnan(beta) || beta < 0.0) throw InvalidParameter("diagonal_decay: beta must be >= 0");
  for (double v : d)
    if (!std::isfinite(v) || v < 0.0) throw InvalidParameter("diagonal_decay: entries must be finite and >= 0");
  const std::vector<std::size_t> active = active_set(d);
  if (active.empty()) throw InvalidInput("diagonal_decay: no positive entry");

  double m = 0.0;
  for (std::size_t i : active) m = std::max(m, d[i]);
  if (std::isinf(beta)) return m;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i : active) {
    const double x = d[i] / m;
    const double w = beta == 0.0 ? 1.0 : std::pow(x, beta);
    num += w * x;
    den += w;
  }
  return m * num / den;
}

} // namespace rpchol::analysis

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rpchol/pivoting.hpp"
#include "rpchol/spd_matrix.hpp"

// Closed forms and exact one-step expectations for partial Cholesky pivoting,
// together with checkers for the associated inequalities. Nothing in here
// samples: every expectation is an explicit n-term sum.
namespace rpchol::analysis {

// Probability vector over pivot indices. Mass is only allowed where
// A_ii > active_tol * max_j A_jj; anything else is rejected, not renormalised.
class PivotDistribution {
public:
  // p must sum to 1 within 1e-12.
  static PivotDistribution from_probabilities(const SpdMatrix& a, std::vector<double> p,
                                              double active_tol = kDefaultActiveTol);
  // Normalises non-negative weights first.
  static PivotDistribution from_weights(const SpdMatrix& a, std::span<const double> weights,
                                        double active_tol = kDefaultActiveTol);
  // p_i proportional to A_ii^beta on the active diagonal (beta = 0: uniform there).
  static PivotDistribution diag_power(const SpdMatrix& a, double beta, double active_tol = kDefaultActiveTol);
  static PivotDistribution indicator(const SpdMatrix& a, std::size_t i, double active_tol = kDefaultActiveTol);

  std::span<const double> p() const { return p_; }
  double operator[](std::size_t i) const { return p_[i]; }
  std::size_t size() const { return p_.size(); }

private:
  explicit PivotDistribution(std::vector<double> p) : p_(std::move(p)) {}
  std::vector<double> p_;
};

// A chain v_0 <= v_1 <= ... checked pairwise with tolerance 1e-9 * scale.
struct BoundReport {
  std::vector<std::pair<std::string, double>> chain;
  std::vector<bool> satisfied;
  std::vector<double> slack; // v_{j+1} - v_j
  double scale = 1.0;

  static BoundReport make(std::vector<std::pair<std::string, double>> chain, double scale, double rel_tol = 1e-9);
  bool all_satisfied() const;
  double value(std::size_t j) const { return chain.at(j).second; }
  double exact() const { return chain.at(0).second; }
  // min_j slack_j / scale; negative means a violated link.
  double worst_relative_slack() const;
};

// (A^3)_ii = a_i^T A a_i with a_i the i-th column.
double cube_diagonal(const SpdMatrix& a, std::size_t i);

// |A|_F^2 + sum_i p_i (|A_i|^4 / A_ii^2 - 2 (A^3)_ii / A_ii)
double lemma1_expected_frobenius(const SpdMatrix& a, const PivotDistribution& p);

struct Expectation {
  SpdMatrix expected_residual;
  double frobenius_sq = 0.0;
  double trace = 0.0;
};

// Brute force: sum_i p_i (A - A_i^T A_i / A_ii) built matrix by matrix.
Expectation enumerate_expected(const SpdMatrix& a, const PivotDistribution& p);

// A - A^2 / tr A. Throws InvalidInput for zero trace.
SpdMatrix beta1_expected_residual(const SpdMatrix& a);
// (1 - tr(A^2) / tr(A)^2) tr(A). Throws InvalidInput for zero trace.
double expected_trace_identity(const SpdMatrix& a);

// A_ii (A^3)_ii - |A_i|^4; non-negative for psd A.
double lemma2_gap(const SpdMatrix& a, std::size_t i);
// Contract scale for lemma2_gap: 1 + |A|_op^4.
double lemma2_scale(const SpdMatrix& a);

// [exact E|B|_F^2 under p ~ A_ii^2, remark bound, first bound, (1 - 1/n)|A|_F^2].
BoundReport theorem1_chain(const SpdMatrix& a);

// [actual |B|_F^2 after pivot i, |A|_F^2 - |A_i|^4/A_ii^2, |A|_F^2 - A_ii^2].
BoundReport corollary1_bounds(const SpdMatrix& a, std::size_t i);

struct Corollary2Result {
  std::size_t index = 0;
  BoundReport report; // [actual |B|_F^2, (1 - 1/n)|A|_F^2]
};

// Pivots at argmax_j |A_j|^2 / A_jj over the active diagonal, ties to the
// largest index.
Corollary2Result corollary2_check(const SpdMatrix& a);

// Expected one-step trace removal for a diagonal matrix,
// sum d_i^(beta+1) / sum d_i^beta over the active entries (beta = inf: max d_i).
double diagonal_decay(std::span<const double> d, double beta);

} // namespace rpchol::analysis

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rpchol/generators.hpp"
#include "rpchol/pivoting.hpp"
#include "rpchol/random.hpp"
#include "rpchol/spd_matrix.hpp"

namespace rpchol {

// On-demand access to the entries of a symmetric matrix. Every entry() and
// diag() call is one evaluation and is counted.
class EntryOracle {
public:
  using EntryFn = std::function<double(std::size_t, std::size_t)>;

  EntryOracle(std::size_t n, EntryFn entry);

  static EntryOracle from_matrix(SpdMatrix a);
  static EntryOracle gaussian_kernel(PointSet points, double bandwidth);

  std::size_t size() const { return n_; }
  double entry(std::size_t i, std::size_t j);
  double diag(std::size_t i) { return entry(i, i); }
  // Reads column j into out (size n): n evaluations.
  void column(std::size_t j, std::span<double> out);

  std::size_t query_count() const { return queries_; }
  void reset_count() { queries_ = 0; }

private:
  std::size_t n_;
  EntryFn entry_;
  std::size_t queries_ = 0;
};

// Dense engine: keeps the residual M^(k) and the approximation W^(k)
// explicitly, with W^(k) + M^(k) = A.
class DenseState {
public:
  explicit DenseState(SpdMatrix a);

  const SpdMatrix& original() const { return original_; }
  const SpdMatrix& residual() const { return residual_; }
  const SpdMatrix& approx() const { return approx_; }
  const std::vector<std::size_t>& pivots() const { return pivots_; }
  std::size_t steps() const { return pivots_.size(); }
  std::size_t size() const { return residual_.size(); }

  // Residual diagonal with round-off negatives clamped to zero.
  std::vector<double> residual_diag() const;
  std::vector<double> residual_row_norms_sq() const;
  // Largest diagonal entry of the original matrix.
  double reference_max() const { return reference_max_; }

  // Moves r r^T / r_i from the residual to the approximation, r = residual
  // row i. Throws NoValidPivot unless i is active.
  void step(std::size_t i, double active_tol = kDefaultActiveTol);

private:
  double reference_max_ = 0.0;
  SpdMatrix original_;
  SpdMatrix residual_;
  SpdMatrix approx_;
  std::vector<std::size_t> pivots_;
};

// Factored engine: k x n factor F with W^(k) = F^T F, plus the residual
// diagonal. Construction reads the diagonal (n evaluations) and each step
// reads one column (n evaluations), so k steps cost (k + 1) n evaluations.
class FactorState {
public:
  explicit FactorState(EntryOracle& oracle);

  std::size_t size() const { return diag_.size(); }
  std::size_t steps() const { return pivots_.size(); }
  const std::vector<std::size_t>& pivots() const { return pivots_; }
  std::span<const double> residual_diag() const { return diag_; }
  std::size_t oracle_queries() const { return queries_; }
  // Row j is the normalised residual row of step j.
  Eigen::MatrixXd factor() const;
  double residual_trace() const;
  double reference_max() const { return reference_max_; }

  void step(EntryOracle& oracle, std::size_t i, double active_tol = kDefaultActiveTol);

private:
  double reference_max_ = 0.0;
  std::vector<Eigen::VectorXd> rows_;
  std::vector<double> diag_;
  std::vector<std::size_t> pivots_;
  std::size_t queries_ = 0;
};

// F^T F
SpdMatrix reconstruct_approx(const FactorState& state);

enum class Engine { Dense, Factored };
enum class Norm { Trace, Frobenius, Operator };

std::string to_string(Engine e);
std::string to_string(Norm n);
Engine parse_engine(std::string_view s);
Norm parse_norm(std::string_view s);

struct NormSelection {
  bool trace = true;
  bool frobenius = false;
  bool op = false;

  static NormSelection all() { return {true, true, true}; }
  bool contains(Norm n) const;
  std::vector<Norm> list() const;
};

struct RunOptions {
  NormSelection norms;
  // Operator norms cost an eigensolve; by default they are recorded only at
  // k = 0 and at the final step.
  bool operator_every_step = false;
  double active_tol = kDefaultActiveTol;
  // Dense engine: check trace monotonicity and the diagonal Frobenius bound
  // after every step and throw InvariantViolation on failure.
  bool check_invariants = true;
};

struct StepRecord {
  std::size_t k = 0;
  double trace = 0.0;
  std::optional<double> frobenius;
  std::optional<double> op;
};

struct NormRatios {
  double trace = 0.0;
  std::optional<double> frobenius;
  std::optional<double> op;

  std::optional<double> get(Norm n) const;
};

struct RunReport {
  std::string rule;
  std::uint64_t seed = 0;
  Engine engine = Engine::Dense;
  std::size_t n = 0;
  std::size_t k_requested = 0;
  std::size_t k = 0; // steps actually taken; smaller when the active set empties
  std::vector<std::size_t> pivots;
  std::vector<StepRecord> steps;
  NormRatios ratios;
};

RunReport run_dense(const SpdMatrix& a, const PivotRule& rule, std::size_t k, Rng& rng, const RunOptions& options = {});
RunReport run_factored(EntryOracle& oracle, const PivotRule& rule, std::size_t k, Rng& rng, const RunOptions& options = {});
RunReport run(const SpdMatrix& a, const PivotRule& rule, std::size_t k, Rng& rng, Engine engine, const RunOptions& options = {});

nlohmann::json to_json(const RunReport& report);

struct EngineComparison {
  std::vector<std::size_t> pivots;
  double approx_deviation = 0.0; // |W_dense - F^T F|_F
  double max_diag_deviation = 0.0; // over all steps
  std::size_t oracle_queries = 0;
  std::size_t query_budget = 0; // (k + 1) n
};

// Runs both engines in lockstep with identical rng streams. Throws
// EquivalenceFailure naming the first divergent step, or when the
// approximations differ by more than 1e-8 |A|_F.
EngineComparison engines_agree(const SpdMatrix& a, const PivotRule& rule, std::size_t k, std::uint64_t seed);

} // namespace rpchol

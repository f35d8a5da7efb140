#include "rpchol/cholesky.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rpchol/errors.hpp"

namespace rpchol {

namespace {

double ratio(double value, double reference) { return reference > 0.0 ? value / reference : 0.0; }

void check_steps(std::size_t k, std::size_t n) {
  if (k > n) {
    std::ostringstream msg;
    msg << "requested " << k << " steps on a " << n << "x" << n << " matrix";
    throw InvalidParameter(msg.str());
  }
}

void require_active(std::span<const double> diag, std::size_t i, double active_tol, double reference_max) {
  if (!is_active(diag, i, active_tol, reference_max)) {
    std::ostringstream msg;
    msg << "index " << i << " is not an active pivot (residual diagonal "
        << (i < diag.size() ? diag[i] : 0.0) << ")";
    throw NoValidPivot(msg.str());
  }
}

} // namespace

// ---------------------------------------------------------------------------
// EntryOracle

EntryOracle::EntryOracle(std::size_t n, EntryFn entry) : n_(n), entry_(std::move(entry)) {
  if (!entry_) throw InvalidParameter("EntryOracle needs an entry function");
}

EntryOracle EntryOracle::from_matrix(SpdMatrix a) {
  auto m = std::make_shared<const SpdMatrix>(std::move(a));
  const std::size_t n = m->size();
  return EntryOracle(n, [m](std::size_t i, std::size_t j) { return (*m)(i, j); });
}

EntryOracle EntryOracle::gaussian_kernel(PointSet points, double bandwidth) {
  if (!(bandwidth > 0.0)) throw InvalidParameter("gaussian kernel bandwidth must be positive");
  auto pts = std::make_shared<const PointSet>(std::move(points));
  const std::size_t n = pts->size();
  return EntryOracle(n, [pts, bandwidth](std::size_t i, std::size_t j) {
    return gaussian_kernel_entry((*pts)[i], (*pts)[j], bandwidth);
  });
}

double EntryOracle::entry(std::size_t i, std::size_t j) {
  if (i >= n_ || j >= n_) throw InvalidParameter("EntryOracle: index out of range");
  ++queries_;
  return entry_(i, j);
}

void EntryOracle::column(std::size_t j, std::span<double> out) {
  if (out.size() != n_) throw InvalidParameter("EntryOracle::column: output size mismatch");
  for (std::size_t i = 0; i < n_; ++i) out[i] = entry(i, j);
}

// ---------------------------------------------------------------------------
// DenseState

DenseState::DenseState(SpdMatrix a) : original_(std::move(a)), residual_(original_), approx_(original_.size()) {
  for (std::size_t i = 0; i < original_.size(); ++i) reference_max_ = std::max(reference_max_, original_(i, i));
}

std::vector<double> DenseState::residual_diag() const {
  std::vector<double> d(size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::max(residual_(i, i), 0.0);
  return d;
}

std::vector<double> DenseState::residual_row_norms_sq() const {
  std::vector<double> r(size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = residual_.row_norm_sq(i);
  return r;
}

void DenseState::step(std::size_t i, double active_tol) {
  require_active(residual_diag(), i, active_tol, reference_max_);
  const Eigen::VectorXd r = residual_.row(i);
  const double pivot = r(static_cast<Eigen::Index>(i));
  residual_.add_outer(r, -1.0 / pivot);
  approx_.add_outer(r, 1.0 / pivot);
  residual_.clear_row_col(i);
  pivots_.push_back(i);
}

// ---------------------------------------------------------------------------
// FactorState

FactorState::FactorState(EntryOracle& oracle) : diag_(oracle.size()) {
  for (std::size_t i = 0; i < diag_.size(); ++i) {
    diag_[i] = std::max(oracle.diag(i), 0.0);
    reference_max_ = std::max(reference_max_, diag_[i]);
  }
  queries_ = diag_.size();
}

void FactorState::step(EntryOracle& oracle, std::size_t i, double active_tol) {
  if (oracle.size() != size()) throw InvalidParameter("FactorState::step: oracle dimension mismatch");
  require_active(diag_, i, active_tol, reference_max_);

  const auto n = static_cast<Eigen::Index>(size());
  const auto col = static_cast<Eigen::Index>(i);
  Eigen::VectorXd r(n);
  oracle.column(i, std::span<double>(r.data(), static_cast<std::size_t>(n)));
  queries_ += size();
  for (const Eigen::VectorXd& f : rows_) r -= f(col) * f;

  const double pivot = r(col);
  if (!(pivot > 0.0)) {
    std::ostringstream msg;
    msg << "index " << i << " lost positivity in the residual column (" << pivot << ")";
    throw NoValidPivot(msg.str());
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    double& d = diag_[static_cast<std::size_t>(j)];
    d = std::max(d - r(j) * r(j) / pivot, 0.0);
  }
  diag_[i] = 0.0;
  rows_.push_back(r / std::sqrt(pivot));
  pivots_.push_back(i);
}

Eigen::MatrixXd FactorState::factor() const {
  Eigen::MatrixXd f(static_cast<Eigen::Index>(rows_.size()), static_cast<Eigen::Index>(size()));
  for (std::size_t j = 0; j < rows_.size(); ++j) f.row(static_cast<Eigen::Index>(j)) = rows_[j].transpose();
  return f;
}

double FactorState::residual_trace() const {
  double t = 0.0;
  for (double d : diag_) t += d;
  return t;
}

SpdMatrix reconstruct_approx(const FactorState& state) {
  SpdMatrix w(state.size());
  const Eigen::MatrixXd f = state.factor();
  for (Eigen::Index j = 0; j < f.rows(); ++j) w.add_outer(f.row(j).transpose(), 1.0);
  return w;
}

// ---------------------------------------------------------------------------
// Names

std::string to_string(Engine e) { return e == Engine::Dense ? "dense" : "factored"; }

std::string to_string(Norm n) {
  switch (n) {
  case Norm::Trace: return "trace";
  case Norm::Frobenius: return "frobenius";
  case Norm::Operator: return "operator";
  }
  return "?";
}

Engine parse_engine(std::string_view s) {
  if (s == "dense") return Engine::Dense;
  if (s == "factored") return Engine::Factored;
  throw InvalidParameter("unknown engine '" + std::string(s) + "'");
}

Norm parse_norm(std::string_view s) {
  if (s == "trace") return Norm::Trace;
  if (s == "frobenius") return Norm::Frobenius;
  if (s == "operator") return Norm::Operator;
  throw InvalidParameter("unknown norm '" + std::string(s) + "'");
}

bool NormSelection::contains(Norm n) const {
  switch (n) {
  case Norm::Trace: return trace;
  case Norm::Frobenius: return frobenius;
  case Norm::Operator: return op;
  }
  return false;
}

std::vector<Norm> NormSelection::list() const {
  std::vector<Norm> out;
  for (Norm n : {Norm::Operator, Norm::Frobenius, Norm::Trace})
    if (contains(n)) out.push_back(n);
  return out;
}

std::optional<double> NormRatios::get(Norm n) const {
  switch (n) {
  case Norm::Trace: return trace;
  case Norm::Frobenius: return frobenius;
  case Norm::Operator: return op;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Drivers

RunReport run_dense(const SpdMatrix& a, const PivotRule& rule, std::size_t k, Rng& rng, const RunOptions& options) {
  const std::size_t n = a.size();
  check_steps(k, n);

  RunReport report;
  report.rule = to_string(rule);
  report.seed = rng.seed();
  report.engine = Engine::Dense;
  report.n = n;
  report.k_requested = k;

  const bool want_rows = needs_row_norms(rule);
  const double frob_scale = std::max(1.0, frobenius_norm_sq(a));
  const double trace_scale = std::max(1.0, std::abs(trace(a)));

  const auto record = [&](const DenseState& st, bool final_step) {
    StepRecord rec;
    rec.k = st.steps();
    rec.trace = trace(st.residual());
    if (options.norms.frobenius) rec.frobenius = std::sqrt(frobenius_norm_sq(st.residual()));
    if (options.norms.op && (options.operator_every_step || rec.k == 0 || final_step))
      rec.op = operator_norm(st.residual());
    return rec;
  };

  DenseState state(a);
  report.steps.push_back(record(state, k == 0));

  for (std::size_t s = 0; s < k; ++s) {
    const std::vector<double> diag = state.residual_diag();
    if (active_set(diag, options.active_tol, state.reference_max()).empty()) break;
    std::vector<double> rows;
    PivotContext ctx{diag, std::nullopt, s, options.active_tol, state.reference_max()};
    if (want_rows) {
      rows = state.residual_row_norms_sq();
      ctx.row_norms_sq = std::span<const double>(rows);
    }
    const std::size_t pivot = select_pivot(rule, ctx, rng);

    const double trace_before = trace(state.residual());
    const double frob_before = frobenius_norm_sq(state.residual());
    const double pivot_value = state.residual()(pivot, pivot);
    state.step(pivot, options.active_tol);

    if (options.check_invariants) {
      const double trace_after = trace(state.residual());
      const double frob_after = frobenius_norm_sq(state.residual());
      if (trace_after > trace_before + 1e-10 * trace_scale) {
        std::ostringstream msg;
        msg << "trace increased at step " << s << ": " << trace_before << " -> " << trace_after;
        throw InvariantViolation(msg.str());
      }
      if (frob_after > frob_before - pivot_value * pivot_value + 1e-8 * frob_scale) {
        std::ostringstream msg;
        msg << "Frobenius decrease below the squared pivot at step " << s << ": " << frob_before << " -> "
            << frob_after << " with pivot " << pivot_value;
        throw InvariantViolation(msg.str());
      }
    }
    report.pivots.push_back(pivot);
    const bool last = s + 1 == k || active_set(state.residual_diag(), options.active_tol, state.reference_max()).empty();
    report.steps.push_back(record(state, last));
  }
  report.k = state.steps();

  const StepRecord& first = report.steps.front();
  StepRecord& last = report.steps.back();
  if (options.norms.op && !last.op) last.op = operator_norm(state.residual());
  report.ratios.trace = ratio(last.trace, first.trace);
  if (options.norms.frobenius) report.ratios.frobenius = ratio(*last.frobenius, *first.frobenius);
  if (options.norms.op) report.ratios.op = ratio(*last.op, *first.op);
  return report;
}

RunReport run_factored(EntryOracle& oracle, const PivotRule& rule, std::size_t k, Rng& rng, const RunOptions& options) {
  const std::size_t n = oracle.size();
  check_steps(k, n);
  if (options.norms.frobenius || options.norms.op)
    throw MissingInformation("the factored engine reports the trace only; use the dense engine for other norms");
  if (needs_row_norms(rule))
    throw MissingInformation("rule " + to_string(rule) + " needs full residual rows (dense engine only)");

  RunReport report;
  report.rule = to_string(rule);
  report.seed = rng.seed();
  report.engine = Engine::Factored;
  report.n = n;
  report.k_requested = k;

  FactorState state(oracle);
  report.steps.push_back({0, state.residual_trace(), std::nullopt, std::nullopt});
  for (std::size_t s = 0; s < k; ++s) {
    const std::span<const double> diag = state.residual_diag();
    if (active_set(diag, options.active_tol, state.reference_max()).empty()) break;
    const PivotContext ctx{diag, std::nullopt, s, options.active_tol, state.reference_max()};
    const std::size_t pivot = select_pivot(rule, ctx, rng);
    state.step(oracle, pivot, options.active_tol);
    report.pivots.push_back(pivot);
    report.steps.push_back({state.steps(), state.residual_trace(), std::nullopt, std::nullopt});
  }
  report.k = state.steps();
  report.ratios.trace = ratio(report.steps.back().trace, report.steps.front().trace);
  return report;
}

RunReport run(const SpdMatrix& a, const PivotRule& rule, std::size_t k, Rng& rng, Engine engine, const RunOptions& options) {
  if (engine == Engine::Dense) return run_dense(a, rule, k, rng, options);
  EntryOracle oracle = EntryOracle::from_matrix(a);
  return run_factored(oracle, rule, k, rng, options);
}

nlohmann::json to_json(const RunReport& report) {
  nlohmann::json steps = nlohmann::json::array();
  for (const StepRecord& s : report.steps) {
    nlohmann::json j{{"k", s.k}, {"trace", s.trace}};
    if (s.frobenius) j["frobenius"] = *s.frobenius;
    if (s.op) j["operator"] = *s.op;
    steps.push_back(std::move(j));
  }
  nlohmann::json ratios{{"trace", report.ratios.trace}};
  if (report.ratios.frobenius) ratios["frobenius"] = *report.ratios.frobenius;
  if (report.ratios.op) ratios["operator"] = *report.ratios.op;
  return {
      {"rule", report.rule},     {"seed", report.seed},   {"engine", to_string(report.engine)},
      {"n", report.n},           {"k", report.k},         {"k_requested", report.k_requested},
      {"pivots", report.pivots}, {"steps", std::move(steps)}, {"ratios", std::move(ratios)},
  };
}

EngineComparison engines_agree(const SpdMatrix& a, const PivotRule& rule, std::size_t k, std::uint64_t seed) {
  const std::size_t n = a.size();
  check_steps(k, n);
  if (needs_row_norms(rule)) throw InvalidParameter("engines_agree: " + to_string(rule) + " is dense-only");

  Rng dense_rng(seed);
  Rng factor_rng(seed);
  DenseState dense(a);
  EntryOracle oracle = EntryOracle::from_matrix(a);
  FactorState factored(oracle);

  EngineComparison out;
  const auto diag_deviation = [&] {
    const std::vector<double> dd = dense.residual_diag();
    const std::span<const double> fd = factored.residual_diag();
    double dev = 0.0;
    for (std::size_t i = 0; i < n; ++i) dev = std::max(dev, std::abs(dd[i] - fd[i]));
    return dev;
  };
  out.max_diag_deviation = diag_deviation();

  for (std::size_t s = 0; s < k; ++s) {
    const std::vector<double> dd = dense.residual_diag();
    const std::vector<double> fd(factored.residual_diag().begin(), factored.residual_diag().end());
    const bool dense_done = active_set(dd, kDefaultActiveTol, dense.reference_max()).empty();
    const bool factor_done = active_set(fd, kDefaultActiveTol, factored.reference_max()).empty();
    if (dense_done && factor_done) break;
    if (dense_done != factor_done) {
      std::ostringstream msg;
      msg << "engines diverge at step " << s << ": only the " << (dense_done ? "dense" : "factored")
          << " engine exhausted its active set";
      throw EquivalenceFailure(msg.str());
    }
    const std::size_t pd =
        select_pivot(rule, PivotContext{dd, std::nullopt, s, kDefaultActiveTol, dense.reference_max()}, dense_rng);
    const std::size_t pf =
        select_pivot(rule, PivotContext{fd, std::nullopt, s, kDefaultActiveTol, factored.reference_max()}, factor_rng);
    if (pd != pf) {
      std::ostringstream msg;
      msg << "engines diverge at step " << s << ": dense pivot " << pd << ", factored pivot " << pf;
      throw EquivalenceFailure(msg.str());
    }
    dense.step(pd);
    factored.step(oracle, pf);
    out.pivots.push_back(pd);
    out.max_diag_deviation = std::max(out.max_diag_deviation, diag_deviation());
  }

  out.approx_deviation = (dense.approx().dense() - reconstruct_approx(factored).dense()).norm();
  out.oracle_queries = factored.oracle_queries();
  out.query_budget = (factored.steps() + 1) * n;
  const double tol = 1e-8 * std::sqrt(frobenius_norm_sq(a));
  if (out.approx_deviation > tol) {
    std::ostringstream msg;
    msg << "approximations differ by " << out.approx_deviation << " (tolerance " << tol << ")";
    throw EquivalenceFailure(msg.str());
  }
  if (out.oracle_queries > out.query_budget) {
    std::ostringstream msg;
    msg << "factored engine used " << out.oracle_queries << " entry evaluations, budget " << out.query_budget;
    throw EquivalenceFailure(msg.str());
  }
  return out;
}

} // namespace rpchol

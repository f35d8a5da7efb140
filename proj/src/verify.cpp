#include "rpchol/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "rpchol/analysis.hpp"
#include "rpchol/cholesky.hpp"
#include "rpchol/errors.hpp"
#include "rpchol/generators.hpp"
#include "rpchol/sweep.hpp"

namespace rpchol::bench {

namespace {

using namespace rpchol::analysis;

class Check {
public:
  Check(std::string name, const VerifyOptions& options) : options_(options) {
    result_.name = std::move(name);
    result_.worst_slack = std::numeric_limits<double>::infinity();
  }

  // slack = (allowed - observed) / scale; the case passes when slack >= 0.
  void record(double slack, const Eigen::MatrixXd& input, const std::string& what) {
    ++result_.cases;
    result_.worst_slack = std::min(result_.worst_slack, slack);
    if (slack >= 0.0) return;
    fail(input, what);
  }

  void fail(const Eigen::MatrixXd& input, const std::string& what) {
    if (result_.failures++ > 0) return;
    result_.first_failure = what;
    const std::filesystem::path path = options_.repro_dir / ("verify_" + result_.name + "_failure.txt");
    try {
      write_matrix_file(input, path);
      result_.repro_file = path;
    } catch (const IoError&) {
    }
  }

  CheckResult finish() {
    if (result_.cases == 0) result_.worst_slack = 0.0;
    return result_;
  }

private:
  const VerifyOptions& options_;
  CheckResult result_;
};

std::string describe(const std::string& kind, std::size_t n, std::size_t index) {
  std::ostringstream s;
  s << kind << " matrix n=" << n << " (case " << index << ")";
  return s.str();
}

struct Case {
  SpdMatrix a;
  std::string label;
};

// Small matrices for the exact one-step identities.
std::vector<Case> small_sweep(std::size_t count, Rng& rng) {
  std::vector<Case> out;
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t n = 3 + c % 10;
    const sweep::Kind kind = sweep::kind_for(c);
    out.push_back({sweep::random_psd(n, kind, rng), describe(sweep::to_string(kind), n, c)});
  }
  return out;
}

std::vector<Case> medium_sweep(std::size_t count, Rng& rng) {
  constexpr std::array<std::size_t, 3> sizes{5, 20, 50};
  std::vector<Case> out;
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t n = sizes[c % sizes.size()];
    const sweep::Kind kind = sweep::kind_for(c / sizes.size() + c);
    out.push_back({sweep::random_psd(n, kind, rng), describe(sweep::to_string(kind), n, c)});
  }
  return out;
}

CheckResult check_lemma1(const std::vector<Case>& cases, Rng& rng, const VerifyOptions& options) {
  Check check("lemma1", options);
  for (const Case& c : cases) {
    const double scale = 1.0 + frobenius_norm_sq(c.a);
    for (int d = 0; d < 5; ++d) {
      const PivotDistribution p = sweep::random_distribution(c.a, rng);
      const double closed = lemma1_expected_frobenius(c.a, p);
      const double brute = enumerate_expected(c.a, p).frobenius_sq;
      check.record((1e-10 * scale - std::abs(closed - brute)) / scale, c.a.dense(), c.label);
    }
  }
  return check.finish();
}

CheckResult check_lemma2(const std::vector<Case>& cases, const VerifyOptions& options) {
  Check check("lemma2", options);
  std::vector<Case> all = cases;
  if (options.inject_non_psd) all.push_back({SpdMatrix::from_rows({{1.0, 2.0}, {2.0, 1.0}}), "injected non-psd matrix (eigenvalues 3, -1)"});
  for (const Case& c : all) {
    const double scale = lemma2_scale(c.a);
    const bool diagonal = c.a.is_diagonal();
    for (std::size_t i = 0; i < c.a.size(); ++i) {
      const double gap = lemma2_gap(c.a, i);
      check.record((gap + 1e-9 * scale) / scale, c.a.dense(), c.label);
      if (diagonal) check.record((1e-12 * scale - std::abs(gap)) / scale, c.a.dense(), c.label + " (diagonal equality)");
    }
  }
  return check.finish();
}

CheckResult check_theorem1(const std::vector<Case>& cases, const VerifyOptions& options) {
  Check check("theorem1", options);
  for (const Case& c : cases) {
    const BoundReport r = theorem1_chain(c.a);
    check.record(r.worst_relative_slack() + 1e-9, c.a.dense(), c.label);
    if (c.a.is_diagonal()) {
      const double gap = std::abs(r.value(2) - r.value(0)) / r.scale;
      check.record(1e-12 - gap, c.a.dense(), c.label + " (diagonal sharpness)");
    }
  }
  return check.finish();
}

CheckResult check_beta1(const std::vector<Case>& cases, const VerifyOptions& options) {
  Check check("beta1", options);
  for (const Case& c : cases) {
    const Expectation e = enumerate_expected(c.a, PivotDistribution::diag_power(c.a, 1.0));
    const SpdMatrix formula = beta1_expected_residual(c.a);
    const double frob = std::sqrt(frobenius_norm_sq(c.a));
    const double dev = (formula.dense() - e.expected_residual.dense()).cwiseAbs().maxCoeff();
    check.record((1e-10 * frob - dev) / frob, c.a.dense(), c.label + " (E B)");
    const double t = trace(c.a);
    const double identity = expected_trace_identity(c.a);
    check.record((1e-12 * t - std::abs(identity - e.trace)) / t, c.a.dense(), c.label + " (E tr B)");
    check.record((1e-12 * t - std::abs(identity - trace(formula))) / t, c.a.dense(), c.label + " (tr of E B)");
    const double n = static_cast<double>(c.a.size());
    check.record(((1.0 - 1.0 / n) * t + 1e-12 * t - identity) / t, c.a.dense(), c.label + " (1 - 1/n bound)");
  }
  return check.finish();
}

CheckResult check_corollary1(const std::vector<Case>& cases, const VerifyOptions& options) {
  Check check("corollary1", options);
  for (const Case& c : cases) {
    std::vector<double> d(c.a.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = c.a(i, i);
    for (std::size_t i : active_set(d)) {
      const BoundReport r = corollary1_bounds(c.a, i);
      check.record(r.worst_relative_slack() + 1e-9, c.a.dense(), c.label + " pivot " + std::to_string(i));
    }
  }
  return check.finish();
}

CheckResult check_corollary2(const std::vector<Case>& cases, const VerifyOptions& options) {
  Check check("corollary2", options);
  for (const Case& c : cases) {
    const Corollary2Result r = corollary2_check(c.a);
    check.record(r.report.worst_relative_slack() + 1e-9, c.a.dense(), c.label);
  }
  return check.finish();
}

CheckResult check_diagonal_decay(std::size_t count, Rng& rng, const VerifyOptions& options) {
  Check check("diagonal_decay", options);
  const std::array<double, 7> betas{0.0, 0.5, 1.0, 2.0, 5.0, 20.0, kInfinity};
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t n = 2 + rng.uniform_index(19);
    std::vector<double> d(n);
    for (double& x : d) x = 0.01 + 10.0 * rng.uniform();
    const double m = *std::max_element(d.begin(), d.end());
    double previous = -std::numeric_limits<double>::infinity();
    double worst = std::numeric_limits<double>::infinity();
    for (double beta : betas) {
      const double v = diagonal_decay(d, beta);
      worst = std::min(worst, (v - previous + 1e-12 * m) / m);
      previous = v;
    }
    check.record(worst, SpdMatrix::diagonal(d).dense(), describe("positive diagonal", n, c));
  }
  return check.finish();
}

CheckResult check_engines(std::size_t count, Rng& rng, const VerifyOptions& options) {
  Check check("engines", options);
  const std::array<const char*, 8> rules{"uniform", "gibbs:1", "gibbs:2", "gibbs:0.5",
                                         "greedy:last", "greedy:random", "gibbs:20", "alt:greedy:last+uniform"};
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t n = 5 + rng.uniform_index(26);
    const sweep::Kind kind = sweep::kind_for(c);
    const SpdMatrix a = sweep::random_psd(n, kind, rng);
    const std::string rule = rules[c % rules.size()];
    const std::size_t k = 1 + rng.uniform_index(n);
    const std::uint64_t seed = rng.next_u64();
    const std::string label = describe(sweep::to_string(kind), n, c) + " rule " + rule + " k=" + std::to_string(k);
    try {
      const EngineComparison r = engines_agree(a, parse_rule(rule), k, seed);
      const double frob = std::sqrt(frobenius_norm_sq(a));
      double max_diag = 0.0;
      for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i));
      check.record((1e-8 * frob - r.approx_deviation) / frob, a.dense(), label + " (approximation)");
      check.record((1e-9 * max_diag - r.max_diag_deviation) / max_diag, a.dense(), label + " (diagonal)");
      check.record(static_cast<double>(r.query_budget) - static_cast<double>(r.oracle_queries), a.dense(),
                   label + " (entry budget)");
    } catch (const EquivalenceFailure& e) {
      check.record(-1.0, a.dense(), label + ": " + e.what());
    }
  }
  return check.finish();
}

CheckResult check_dense_run(const std::vector<Case>& cases, Rng& rng, const VerifyOptions& options) {
  Check check("dense_invariants", options);
  const std::array<const char*, 5> rules{"uniform", "gibbs:1", "gibbs:2", "greedy:last", "diagnormratio"};
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const SpdMatrix& a = cases[c].a;
    const PivotRule rule = parse_rule(rules[c % rules.size()]);
    const double amax = a.max_abs();
    const double frob = std::sqrt(frobenius_norm_sq(a));
    DenseState state(a);
    double worst = std::numeric_limits<double>::infinity();
    try {
      for (std::size_t s = 0; s < a.size(); ++s) {
        const std::vector<double> diag = state.residual_diag();
        if (active_set(diag, kDefaultActiveTol, state.reference_max()).empty()) break;
        const std::vector<double> rows = state.residual_row_norms_sq();
        const PivotContext ctx{diag, std::span<const double>(rows), s, kDefaultActiveTol, state.reference_max()};
        const std::size_t i = select_pivot(rule, ctx, rng);
        const double trace_before = trace(state.residual());
        const double frob_before = frobenius_norm_sq(state.residual());
        const double pivot = state.residual()(i, i);
        state.step(i);

        const double decomposition =
            (state.approx().dense() + state.residual().dense() - a.dense()).cwiseAbs().maxCoeff();
        worst = std::min(worst, (1e-10 * (1.0 + amax) - decomposition) / (1.0 + amax));
        const double tscale = std::max(1.0, trace(a));
        worst = std::min(worst, (trace_before + 1e-10 * tscale - trace(state.residual())) / tscale);
        const double fscale = std::max(1.0, frob * frob);
        worst = std::min(worst, (frob_before - pivot * pivot + 1e-8 * fscale - frobenius_norm_sq(state.residual())) / fscale);
        const double row = std::sqrt(state.residual().row_norm_sq(i));
        worst = std::min(worst, (1e-9 * frob - row) / frob);
      }
      if (!is_psd(state.residual())) worst = std::min(worst, -1.0);
    } catch (const Error&) {
      worst = -1.0;
    }
    check.record(worst, a.dense(), cases[c].label);
  }
  return check.finish();
}

} // namespace

bool VerifySummary::ran_any() const {
  return std::any_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.cases > 0; });
}

bool VerifySummary::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed(); });
}

VerifySummary run_verify(const VerifyOptions& options) {
  VerifySummary summary;
  Rng rng(options.seed);
  const std::size_t count = options.sweep_size;
  const std::vector<Case> small = small_sweep(count, rng);
  const std::vector<Case> medium = medium_sweep(count, rng);

  summary.checks.push_back(check_lemma1(small, rng, options));
  summary.checks.push_back(check_lemma2(small, options));
  summary.checks.push_back(check_theorem1(medium, options));
  summary.checks.push_back(check_beta1(small, options));
  summary.checks.push_back(check_corollary1(small, options));
  summary.checks.push_back(check_corollary2(medium, options));
  summary.checks.push_back(check_diagonal_decay(count, rng, options));
  summary.checks.push_back(check_engines(count, rng, options));
  summary.checks.push_back(check_dense_run(small, rng, options));
  return summary;
}

void print_summary(const VerifySummary& summary, std::ostream& out) {
  if (!summary.ran_any()) {
    out << "warning: no checks run (sweep size 0)\n";
    return;
  }
  out << std::left << std::setw(18) << "check" << std::right << std::setw(8) << "cases" << std::setw(10) << "failed"
      << std::setw(16) << "min margin" << "  result\n";
  for (const CheckResult& c : summary.checks) {
    out << std::left << std::setw(18) << c.name << std::right << std::setw(8) << c.cases << std::setw(10) << c.failures
        << std::setw(16) << std::setprecision(3) << std::scientific << c.worst_slack << std::defaultfloat << "  "
        << (c.passed() ? "PASS" : "FAIL") << '\n';
    if (!c.passed()) {
      out << "    first failure: " << c.first_failure << '\n';
      if (c.repro_file) out << "    reproduction matrix: " << c.repro_file->string() << '\n';
    }
  }
  out << (summary.passed() ? "all checks passed\n" : "some checks FAILED\n");
}

} // namespace rpchol::bench

#include <doctest.h>

#include <cmath>

#include "rpchol/cholesky.hpp"
#include "rpchol/errors.hpp"
#include "rpchol/generators.hpp"
#include "rpchol/random.hpp"

using namespace rpchol;

namespace {

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("dense step: hand-computed downdate") {
  DenseState s(SpdMatrix::from_rows({{2, 1}, {1, 2}}));
  s.step(0);
  Eigen::MatrixXd residual(2, 2), approx(2, 2);
  residual << 0, 0, 0, 1.5;
  approx << 2, 1, 1, 0.5;
  CHECK(max_abs_diff(s.residual().dense(), residual) <= 1e-15);
  CHECK(max_abs_diff(s.approx().dense(), approx) <= 1e-15);
  CHECK(s.pivots() == std::vector<std::size_t>{0});
  CHECK_THROWS_AS(s.step(0), NoValidPivot);
}

TEST_CASE("dense step on a diagonal matrix removes exactly the pivot") {
  DenseState s(SpdMatrix::diagonal({1.0, 2.0, 3.0}));
  s.step(1);
  CHECK(s.residual().dense() == SpdMatrix::diagonal({1.0, 0.0, 3.0}).dense());
  CHECK_THROWS_AS(s.step(1), NoValidPivot);
}

TEST_CASE("dense invariants along a run") {
  Rng gen(31);
  const SpdMatrix a = random_spd_spectrum(40, named_spectrum("i^2"), gen);
  const double scale = 1.0 + a.max_abs();
  DenseState s(a);
  Rng rng(2);
  for (std::size_t k = 0; k < 25; ++k) {
    const std::vector<double> d = s.residual_diag();
    PivotContext ctx;
    ctx.diag = d;
    ctx.step = k;
    ctx.reference_max = s.reference_max();
    const std::size_t i = select_pivot(Gibbs{1.0}, ctx, rng);
    s.step(i);
    CHECK(max_abs_diff(s.approx().dense() + s.residual().dense(), a.dense()) <= 1e-10 * scale);
    CHECK(s.residual().row(i).norm() <= 1e-9 * std::sqrt(frobenius_norm_sq(a)));
    CHECK(is_psd(s.residual()));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.approx().dense());
  const auto& ev = es.eigenvalues();
  int rank = 0;
  for (Eigen::Index j = 0; j < ev.size(); ++j) rank += ev(j) > 1e-9 * ev.maxCoeff();
  CHECK(rank <= 25);
}

TEST_CASE("factored step: hand-computed factor row") {
  EntryOracle oracle = EntryOracle::from_matrix(SpdMatrix::from_rows({{2, 1}, {1, 2}}));
  FactorState s(oracle);
  CHECK(s.oracle_queries() == 2);
  s.step(oracle, 0);
  CHECK(s.oracle_queries() == 4);
  const Eigen::MatrixXd f = s.factor();
  REQUIRE(f.rows() == 1);
  CHECK(f(0, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(f(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(s.residual_diag()[0] == 0.0);
  CHECK(s.residual_diag()[1] == doctest::Approx(1.5).epsilon(1e-15));

  Eigen::MatrixXd approx(2, 2);
  approx << 2, 1, 1, 0.5;
  CHECK(max_abs_diff(reconstruct_approx(s).dense(), approx) <= 1e-15);
  CHECK_THROWS_AS(s.step(oracle, 0), NoValidPivot);
}

TEST_CASE("factored step on a diagonal matrix") {
  EntryOracle oracle = EntryOracle::from_matrix(SpdMatrix::diagonal({1.0, 2.0, 3.0}));
  FactorState s(oracle);
  s.step(oracle, 2);
  const Eigen::MatrixXd f = s.factor();
  CHECK(f(0, 0) == 0.0);
  CHECK(f(0, 1) == 0.0);
  CHECK(f(0, 2) == doctest::Approx(std::sqrt(3.0)));
  CHECK(std::vector<double>(s.residual_diag().begin(), s.residual_diag().end()) == std::vector<double>{1.0, 2.0, 0.0});
}

TEST_CASE("reconstruct_approx: empty and complete factorisations") {
  Rng gen(4);
  const SpdMatrix a = random_spd_spectrum(12, named_spectrum("1+i/100"), gen);
  EntryOracle oracle = EntryOracle::from_matrix(a);
  FactorState s(oracle);
  CHECK(reconstruct_approx(s).dense() == Eigen::MatrixXd::Zero(12, 12));
  Rng rng(1);
  for (std::size_t k = 0; k < 12; ++k) {
    PivotContext ctx;
    ctx.diag = s.residual_diag();
    ctx.reference_max = s.reference_max();
    s.step(oracle, select_pivot(Uniform{}, ctx, rng));
  }
  CHECK((reconstruct_approx(s).dense() - a.dense()).norm() <= 1e-8 * std::sqrt(frobenius_norm_sq(a)));
}

TEST_CASE("oracle entry budget") {
  Rng gen(5);
  const SpdMatrix a = random_spd_spectrum(100, named_spectrum("i"), gen);
  EntryOracle oracle = EntryOracle::from_matrix(a);
  Rng rng(6);
  RunOptions opt;
  const RunReport r = run_factored(oracle, Gibbs{1.0}, 10, rng, opt);
  CHECK(r.k == 10);
  CHECK(oracle.query_count() <= 1100);
  CHECK(oracle.query_count() == 1100);
}

TEST_CASE("run: identity is exhausted in n steps") {
  for (const char* rule : {"uniform", "gibbs:1", "gibbs:2", "greedy:last", "greedy:random", "diagnormratio",
                           "alt:greedy:last+uniform"}) {
    CAPTURE(rule);
    Rng rng(3);
    RunOptions opt;
    opt.norms = NormSelection::all();
    const RunReport r = run_dense(SpdMatrix::identity(5), parse_rule(rule), 5, rng, opt);
    CHECK(r.k == 5);
    CHECK(r.ratios.trace == 0.0);
    CHECK(*r.ratios.frobenius == 0.0);
    CHECK(*r.ratios.op == 0.0);
  }
}

TEST_CASE("run: greedy on a diagonal matrix") {
  Rng rng(0);
  const RunReport r = run_dense(SpdMatrix::diagonal({1.0, 2.0, 3.0}), Greedy{}, 1, rng);
  CHECK(r.pivots == std::vector<std::size_t>{2});
  CHECK(r.ratios.trace == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("run: early termination on rank-deficient input") {
  Rng gen(8);
  const SpdMatrix a = random_spd_spectrum(std::vector<double>{3.0, 2.0, 1.0, 0.0, 0.0, 0.0}, gen);
  Rng rng(1);
  RunOptions opt;
  opt.norms = NormSelection::all();
  const RunReport r = run_dense(a, Uniform{}, 6, rng, opt);
  CHECK(r.k_requested == 6);
  CHECK(r.k == 3);
  CHECK(r.ratios.trace <= 1e-9);
}

TEST_CASE("run: errors") {
  Rng rng(0);
  const SpdMatrix a = SpdMatrix::identity(3);
  CHECK_THROWS_AS(run_dense(a, Uniform{}, 4, rng), InvalidParameter);
  EntryOracle oracle = EntryOracle::from_matrix(a);
  RunOptions opt;
  opt.norms = NormSelection::all();
  CHECK_THROWS_AS(run_factored(oracle, Uniform{}, 2, rng, opt), MissingInformation);
  EntryOracle oracle2 = EntryOracle::from_matrix(a);
  CHECK_THROWS_AS(run_factored(oracle2, DiagNormRatio{}, 2, rng), MissingInformation);
}

TEST_CASE("run: per-step trace is non-increasing and ratios lie in [0, 1]") {
  Rng gen(12);
  const SpdMatrix a = random_spd_spectrum(60, named_spectrum("i^3"), gen);
  Rng rng(4);
  RunOptions opt;
  opt.norms = NormSelection::all();
  opt.operator_every_step = true;
  const RunReport r = run_dense(a, Gibbs{2.0}, 30, rng, opt);
  REQUIRE(r.steps.size() == 31);
  for (std::size_t j = 1; j < r.steps.size(); ++j) {
    CHECK(r.steps[j].trace <= r.steps[j - 1].trace + 1e-10);
    CHECK(*r.steps[j].frobenius <= *r.steps[j - 1].frobenius + 1e-8);
    CHECK(r.steps[j].op.has_value());
  }
  for (Norm n : {Norm::Trace, Norm::Frobenius, Norm::Operator}) {
    const double v = *r.ratios.get(n);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0 + 1e-9);
  }
  const nlohmann::json j = to_json(r);
  CHECK(j["rule"] == "gibbs:2");
  CHECK(j["pivots"].size() == 30);
  CHECK(j["steps"].size() == 31);
  CHECK(j["ratios"].contains("operator"));
}

TEST_CASE("spiral kernel: greedy erases the last rows") {
  Rng pts_rng(0);
  const PointSet pts = spiral_points(SpiralConfig{}, pts_rng);
  const SpdMatrix a = gaussian_kernel(pts, 1000.0);
  Rng rng(0);
  const RunReport r = run_dense(a, Greedy{}, 50, rng);
  REQUIRE(r.pivots.size() == 50);
  for (std::size_t j = 0; j < 50; ++j) CHECK(r.pivots[j] == 499 - j);
}

TEST_CASE("engines agree") {
  SUBCASE("diagonal, Gibbs(2)") {
    const EngineComparison c = engines_agree(SpdMatrix::diagonal({1.0, 2.0, 3.0}), Gibbs{2.0}, 2, 7);
    CHECK(c.approx_deviation < 1e-12);
    CHECK(c.pivots.size() == 2);
  }
  SUBCASE("random spectrum, uniform") {
    Rng gen(30);
    const EngineComparison c = engines_agree(random_spd_spectrum(30, named_spectrum("i"), gen), Uniform{}, 10, 1);
    CHECK(c.oracle_queries <= c.query_budget);
    CHECK(c.query_budget == 330);
  }
  SUBCASE("identity, greedy tie-break") {
    const EngineComparison c = engines_agree(SpdMatrix::identity(4), Greedy{}, 4, 0);
    CHECK(c.pivots == std::vector<std::size_t>{3, 2, 1, 0});
  }
  SUBCASE("diagnormratio is dense-only") {
    CHECK_THROWS_AS(engines_agree(SpdMatrix::identity(4), DiagNormRatio{}, 2, 0), InvalidParameter);
  }
}

TEST_CASE("Gaussian kernel oracle counts evaluations") {
  EntryOracle o = EntryOracle::gaussian_kernel(PointSet({{0, 0}, {1, 0}, {0, 2}}), 1.0);
  CHECK(o.entry(0, 1) == doctest::Approx(std::exp(-1.0)));
  CHECK(o.diag(2) == 1.0);
  CHECK(o.query_count() == 2);
  o.reset_count();
  CHECK(o.query_count() == 0);
}

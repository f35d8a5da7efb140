#include "rpchol/spd_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rpchol/errors.hpp"

namespace rpchol {

namespace {

using Index = Eigen::Index;

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double sum = 0.0;
  const Index n = a.rows();
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

} // namespace

SpdMatrix::SpdMatrix(std::size_t n) : data_(Eigen::MatrixXd::Zero(static_cast<Index>(n), static_cast<Index>(n))) {}

SpdMatrix SpdMatrix::identity(std::size_t n) {
  SpdMatrix m(n);
  m.data_.setIdentity();
  return m;
}

SpdMatrix SpdMatrix::diagonal(std::span<const double> d) {
  SpdMatrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m.data_(static_cast<Index>(i), static_cast<Index>(i)) = d[i];
  return m;
}

SpdMatrix SpdMatrix::diagonal(std::initializer_list<double> d) {
  return diagonal(std::span<const double>(d.begin(), d.size()));
}

SpdMatrix SpdMatrix::from_dense(const Eigen::MatrixXd& a, double rel_tol) {
  if (a.rows() != a.cols()) {
    std::ostringstream msg;
    msg << "matrix is not square (" << a.rows() << "x" << a.cols() << ")";
    throw InvalidInput(msg.str());
  }
  if (!a.allFinite()) throw InvalidInput("matrix has non-finite entries");
  const double scale = 1.0 + (a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff());
  const Index n = a.rows();
  SpdMatrix m(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    m.data_(j, j) = a(j, j);
    for (Index i = j + 1; i < n; ++i) {
      if (std::abs(a(i, j) - a(j, i)) > rel_tol * scale) {
        std::ostringstream msg;
        msg << "matrix is not symmetric at (" << i << ", " << j << "): " << a(i, j) << " vs " << a(j, i);
        throw InvalidInput(msg.str());
      }
      const double v = 0.5 * (a(i, j) + a(j, i));
      m.data_(i, j) = v;
      m.data_(j, i) = v;
    }
  }
  return m;
}

SpdMatrix SpdMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const auto n = static_cast<Index>(rows.size());
  Eigen::MatrixXd a(n, n);
  Index i = 0;
  for (const auto& r : rows) {
    if (static_cast<Index>(r.size()) != n) throw InvalidInput("ragged row list");
    Index j = 0;
    for (double v : r) a(i, j++) = v;
    ++i;
  }
  return from_dense(a);
}

bool SpdMatrix::is_diagonal() const {
  const Index n = data_.rows();
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      if (i != j && data_(i, j) != 0.0) return false;
  return true;
}

void SpdMatrix::add_outer(const Eigen::VectorXd& v, double scale) {
  const Index n = data_.rows();
  if (v.size() != n) throw InvalidParameter("add_outer: dimension mismatch");
  for (Index j = 0; j < n; ++j) {
    for (Index i = j; i < n; ++i) {
      const double value = data_(i, j) + scale * (v(i) * v(j));
      data_(i, j) = value;
      data_(j, i) = value;
    }
  }
}

void SpdMatrix::clear_row_col(std::size_t i) {
  data_.row(static_cast<Index>(i)).setZero();
  data_.col(static_cast<Index>(i)).setZero();
}

double trace(const SpdMatrix& a) { return a.dense().trace(); }

double frobenius_norm_sq(const SpdMatrix& a) { return a.dense().squaredNorm(); }

SymEigen sym_eigen(const SpdMatrix& input, const JacobiOptions& options) {
  Eigen::MatrixXd a = input.dense();
  const Index n = a.rows();
  Eigen::MatrixXd v;
  if (options.compute_vectors) v = Eigen::MatrixXd::Identity(n, n);

  const double threshold = options.rel_tol * a.norm();
  int sweep = 0;
  for (;; ++sweep) {
    if (off_diagonal_norm(a) <= threshold) break;
    if (sweep >= options.max_sweeps) {
      std::ostringstream msg;
      msg << "Jacobi eigensolver did not converge in " << options.max_sweeps
          << " sweeps (off-diagonal mass " << off_diagonal_norm(a) << ", target " << threshold << ")";
      throw NonConvergence(msg.str());
    }
    for (Index p = 0; p + 1 < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation annihilating a(p, q); t is the smaller root of t^2 + 2 theta t - 1 = 0.
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Index r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double g = a(r, p);
          const double h = a(r, q);
          const double rp = g - s * (h + g * tau);
          const double rq = h + s * (g - h * tau);
          a(r, p) = rp;
          a(p, r) = rp;
          a(r, q) = rq;
          a(q, r) = rq;
        }
        if (options.compute_vectors) {
          for (Index r = 0; r < n; ++r) {
            const double g = v(r, p);
            const double h = v(r, q);
            v(r, p) = g - s * (h + g * tau);
            v(r, q) = h + s * (g - h * tau);
          }
        }
      }
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return a(x, x) > a(y, y); });

  SymEigen out;
  out.sweeps = sweep;
  out.values.resize(n);
  if (options.compute_vectors) out.vectors.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    const Index src = order[static_cast<std::size_t>(j)];
    out.values(j) = a(src, src);
    if (options.compute_vectors) out.vectors.col(j) = v.col(src);
  }
  return out;
}

std::vector<double> sym_eigenvalues(const SpdMatrix& a) {
  const SymEigen e = sym_eigen(a);
  return {e.values.data(), e.values.data() + e.values.size()};
}

PowerIterationResult power_iteration(const SpdMatrix& a, double rel_tol, int max_iterations) {
  const Index n = static_cast<Index>(a.size());
  PowerIterationResult result;
  if (n == 0) {
    result.converged = true;
    return result;
  }
  if (max_iterations < 0) max_iterations = static_cast<int>(10 * n);

  // Deterministic, generically non-orthogonal start vector.
  Eigen::VectorXd x(n);
  for (Index i = 0; i < n; ++i) x(i) = 1.0 + 0.1 * static_cast<double>(i % 7) + 1e-3 * static_cast<double>(i % 13);
  x.normalize();

  double previous = 0.0;
  for (int it = 1; it <= max_iterations; ++it) {
    Eigen::VectorXd y = a.dense() * x;
    const double rayleigh = x.dot(y);
    const double norm = y.norm();
    result.iterations = it;
    if (norm == 0.0) {
      result.value = 0.0;
      result.converged = true;
      return result;
    }
    result.value = std::abs(rayleigh);
    // A stalled Rayleigh quotient alone is not enough when the top of the
    // spectrum is clustered. |Ax - rho x| <= tol rho puts rho within tol rho
    // of an eigenvalue.
    const double residual = (y - rayleigh * x).norm();
    if (it > 1 && std::abs(result.value - previous) <= rel_tol * result.value && residual <= rel_tol * result.value) {
      result.converged = true;
      return result;
    }
    previous = result.value;
    x = y / norm;
  }
  return result;
}

double operator_norm(const SpdMatrix& a) {
  if (a.size() == 0) return 0.0;
  if (a.size() > 200) {
    const PowerIterationResult p = power_iteration(a);
    if (p.converged) return p.value;
  }
  const SymEigen e = sym_eigen(a);
  return std::max(std::abs(e.values(0)), std::abs(e.values(e.values.size() - 1)));
}

double schatten_norm(const SpdMatrix& a, double p) {
  if (!(p > 0.0)) throw InvalidParameter("Schatten exponent must be positive");
  if (a.size() == 0) return 0.0;
  const SymEigen e = sym_eigen(a);
  if (std::isinf(p)) return std::max(e.values(0), 0.0);
  double sum = 0.0;
  for (Index i = 0; i < e.values.size(); ++i) sum += std::pow(std::max(e.values(i), 0.0), p);
  return std::pow(sum, 1.0 / p);
}

bool is_psd(const SpdMatrix& a, double tol) {
  if (a.size() == 0) return true;
  const SymEigen e = sym_eigen(a);
  const double op = std::max(std::abs(e.values(0)), std::abs(e.values(e.values.size() - 1)));
  return e.values(e.values.size() - 1) >= -tol * (1.0 + op);
}

} // namespace rpchol

#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rpchol {

// Eigenvalue floor for matrices certified psd: lambda_min >= -kPsdTol * (1 + |A|_op).
inline constexpr double kPsdTol = 1e-9;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Dense symmetric matrix. Both triangles are stored and every mutation writes
// them together, so entries(i, j) == entries(j, i) holds bit-for-bit.
class SpdMatrix {
public:
  SpdMatrix() = default;
  explicit SpdMatrix(std::size_t n);

  static SpdMatrix zero(std::size_t n) { return SpdMatrix(n); }
  static SpdMatrix identity(std::size_t n);
  static SpdMatrix diagonal(std::span<const double> d);
  static SpdMatrix diagonal(std::initializer_list<double> d);

  // Accepts a square matrix that is symmetric within
  // rel_tol * (1 + max|a_ij|) and stores its symmetric part.
  // Throws InvalidInput otherwise.
  static SpdMatrix from_dense(const Eigen::MatrixXd& a, double rel_tol = 1e-12);
  static SpdMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t size() const { return static_cast<std::size_t>(data_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return data_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  const Eigen::MatrixXd& dense() const { return data_; }
  Eigen::VectorXd diag() const { return data_.diagonal(); }
  Eigen::VectorXd row(std::size_t i) const {
    return data_.row(static_cast<Eigen::Index>(i)).transpose();
  }
  double row_norm_sq(std::size_t i) const {
    return data_.col(static_cast<Eigen::Index>(i)).squaredNorm();
  }
  double max_abs() const { return size() == 0 ? 0.0 : data_.cwiseAbs().maxCoeff(); }
  bool is_diagonal() const;

  // this += scale * v v^T, written symmetrically.
  void add_outer(const Eigen::VectorXd& v, double scale);
  // Sets row i and column i to exactly zero.
  void clear_row_col(std::size_t i);

private:
  Eigen::MatrixXd data_;
};

double trace(const SpdMatrix& a);
double frobenius_norm_sq(const SpdMatrix& a);

struct JacobiOptions {
  // Stop once the off-diagonal Frobenius mass is <= rel_tol * |A|_F.
  double rel_tol = 1e-12;
  int max_sweeps = 100;
  bool compute_vectors = false;
};

struct SymEigen {
  Eigen::VectorXd values;  // descending
  Eigen::MatrixXd vectors; // column j pairs with values[j]; empty unless requested
  int sweeps = 0;
};

// Cyclic Jacobi eigensolver. Throws NonConvergence after max_sweeps.
SymEigen sym_eigen(const SpdMatrix& a, const JacobiOptions& options = {});
std::vector<double> sym_eigenvalues(const SpdMatrix& a);

struct PowerIterationResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

PowerIterationResult power_iteration(const SpdMatrix& a, double rel_tol = 1e-10, int max_iterations = -1);

// Spectral norm max|lambda|. Jacobi for n <= 200, power iteration above
// (falling back to Jacobi if the iteration cap is hit).
double operator_norm(const SpdMatrix& a);

// (sum max(lambda_i, 0)^p)^(1/p); p = kInfinity gives the largest eigenvalue.
double schatten_norm(const SpdMatrix& a, double p);

bool is_psd(const SpdMatrix& a, double tol = kPsdTol);

} // namespace rpchol

#include "rpchol/generators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "rpchol/errors.hpp"

namespace rpchol {

SpectrumFn named_spectrum(std::string_view name) {
  if (name == "1+i/100") return [](std::size_t i) { return 1.0 + static_cast<double>(i) / 100.0; };
  if (name == "i") return [](std::size_t i) { return static_cast<double>(i); };
  if (name == "i^2") return [](std::size_t i) { return std::pow(static_cast<double>(i), 2); };
  if (name == "i^3") return [](std::size_t i) { return std::pow(static_cast<double>(i), 3); };
  if (name == "i^5") return [](std::size_t i) { return std::pow(static_cast<double>(i), 5); };
  if (name == "1/i") return [](std::size_t i) { return 1.0 / static_cast<double>(i); };
  if (name == "1") return [](std::size_t) { return 1.0; };
  throw InvalidParameter("unknown spectrum '" + std::string(name) + "'");
}

SpdMatrix random_spd_spectrum(std::span<const double> eigenvalues, Rng& rng) {
  const std::size_t n = eigenvalues.size();
  if (n == 0) throw InvalidParameter("random_spd_spectrum: empty spectrum");
  Eigen::VectorXd d(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double v = eigenvalues[i];
    if (!std::isfinite(v) || v < 0.0) {
      std::ostringstream msg;
      msg << "random_spd_spectrum: eigenvalue " << i + 1 << " is " << v << ", expected finite and >= 0";
      throw InvalidParameter(msg.str());
    }
    d(static_cast<Eigen::Index>(i)) = v;
  }
  const Eigen::MatrixXd q = random_orthogonal(n, rng);
  const Eigen::MatrixXd a = q.transpose() * d.asDiagonal() * q;
  return SpdMatrix::from_dense(a, 1e-10);
}

SpdMatrix random_spd_spectrum(std::size_t n, const SpectrumFn& f, Rng& rng) {
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = f(i + 1);
  return random_spd_spectrum(values, rng);
}

PointSet::PointSet(std::vector<Point2> points) : points_(std::move(points)) {
  if (points_.empty()) throw InvalidParameter("PointSet must contain at least one point");
  for (const auto& p : points_)
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidParameter("PointSet coordinates must be finite");
}

Point2 spiral_point(double t, double scale) {
  const double r = std::exp(t) * scale;
  return {r * std::cos(t), r * std::sin(t)};
}

PointSet spiral_points(const SpiralConfig& config, Rng& rng) {
  if (config.first_count + config.second_count != config.n_total)
    throw InvalidParameter("spiral_points: cluster counts must sum to n_total");
  if (config.n_total == 0) throw InvalidParameter("spiral_points: n_total must be positive");
  for (const Interval& r : {config.first_range, config.second_range}) {
    if (!(r.lo < r.hi)) throw InvalidParameter("spiral_points: empty parameter interval");
    if (r.lo < 0.0 || r.hi > 64.0) throw InvalidParameter("spiral_points: parameter interval must lie within [0, 64]");
  }
  if (!(config.scale > 0.0) || !std::isfinite(config.scale)) throw InvalidParameter("spiral_points: scale must be positive");

  std::vector<double> t;
  t.reserve(config.n_total);
  const Interval a = config.first_range;
  for (std::size_t j = 0; j < config.first_count; ++j) t.push_back(a.lo + (a.hi - a.lo) * rng.uniform());
  const Interval b = config.second_range;
  for (std::size_t j = 0; j < config.second_count; ++j) {
    const double u = rng.uniform();
    t.push_back(b.hi - (b.hi - b.lo) * u * u);
  }
  if (config.sort_by_parameter) std::sort(t.begin(), t.end());

  std::vector<Point2> points;
  points.reserve(t.size());
  for (double s : t) points.push_back(spiral_point(s, config.scale));
  return PointSet(std::move(points));
}

double gaussian_kernel_entry(const Point2& a, const Point2& b, double bandwidth) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::exp(-(dx * dx + dy * dy) / bandwidth);
}

SpdMatrix gaussian_kernel(const PointSet& points, double bandwidth) {
  if (!(bandwidth > 0.0)) throw InvalidParameter("gaussian_kernel: bandwidth must be positive");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    a(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = gaussian_kernel_entry(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)], bandwidth);
      a(i, j) = v;
      a(j, i) = v;
    }
  }
  return SpdMatrix::from_dense(a, 0.0);
}

void write_points_csv(const PointSet& points, std::ostream& out) {
  out << "x,y\n" << std::setprecision(17);
  for (const auto& p : points.points()) out << p.x << ',' << p.y << '\n';
}

PointSet read_points_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "x,y") throw InvalidInput("points CSV: expected header 'x,y'");
  std::vector<Point2> points;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InvalidInput("points CSV: malformed row '" + line + "'");
    points.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
  }
  return PointSet(std::move(points));
}

void write_matrix(const Eigen::MatrixXd& a, std::ostream& out) {
  out << a.rows() << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out << (j ? " " : "") << a(i, j);
    out << '\n';
  }
}

void write_matrix_file(const Eigen::MatrixXd& a, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write matrix file " + path.string());
  write_matrix(a, out);
  if (!out) throw IoError("failed writing matrix file " + path.string());
}

Eigen::MatrixXd read_matrix(std::istream& in) {
  long long n = -1;
  if (!(in >> n) || n < 0) throw InvalidInput("matrix file: expected a non-negative dimension header");
  Eigen::MatrixXd a(n, n);
  for (long long i = 0; i < n; ++i) {
    for (long long j = 0; j < n; ++j) {
      if (!(in >> a(i, j))) {
        std::ostringstream msg;
        msg << "matrix file: missing or malformed entry (" << i << ", " << j << ")";
        throw InvalidInput(msg.str());
      }
    }
  }
  std::string extra;
  if (in >> extra) throw InvalidInput("matrix file: trailing data after " + std::to_string(n * n) + " entries");
  return a;
}

SpdMatrix load_spd_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("matrix file not found: " + path.string());
  SpdMatrix a = SpdMatrix::from_dense(read_matrix(in), 1e-12);
  if (!is_psd(a)) throw InvalidInput("matrix file " + path.string() + " is not positive semi-definite");
  return a;
}

} // namespace rpchol

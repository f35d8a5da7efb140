#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rpchol/random.hpp"
#include "rpchol/spd_matrix.hpp"

namespace rpchol {

// Spectrum as a function of the 1-based eigenvalue index i.
using SpectrumFn = std::function<double(std::size_t)>;

// Named spectra: "1+i/100", "i", "i^2", "i^3", "i^5", "1/i", "1".
SpectrumFn named_spectrum(std::string_view name);

// A = Q^T D Q with Q Haar and D = diag(f(1), ..., f(n)).
SpdMatrix random_spd_spectrum(std::size_t n, const SpectrumFn& f, Rng& rng);
SpdMatrix random_spd_spectrum(std::span<const double> eigenvalues, Rng& rng);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

class PointSet {
public:
  // Throws InvalidParameter on an empty set or non-finite coordinates.
  explicit PointSet(std::vector<Point2> points);

  std::size_t size() const { return points_.size(); }
  const Point2& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Point2> points() const { return points_; }

private:
  std::vector<Point2> points_;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Two clusters along gamma(t) = (e^t cos t, e^t sin t) with t in [0, 64].
// The first cluster has t uniform on first_range. The second has
// t = hi - (hi - lo) u^2 for u uniform on [0, 1], which crowds it towards the
// outer end of the curve. With sort_by_parameter the points are ordered by
// increasing t, so the largest indices are the outermost (mutually isolated)
// points. Coordinates are multiplied by scale.
struct SpiralConfig {
  std::size_t n_total = 500;
  std::size_t first_count = 250;
  std::size_t second_count = 250;
  Interval first_range{0.0, 6.0};
  Interval second_range{6.0, 64.0};
  double scale = 1.0;
  bool sort_by_parameter = true;
};

Point2 spiral_point(double t, double scale = 1.0);
PointSet spiral_points(const SpiralConfig& config, Rng& rng);

// exp(-|x_i - x_j|^2 / bandwidth)
double gaussian_kernel_entry(const Point2& a, const Point2& b, double bandwidth);
SpdMatrix gaussian_kernel(const PointSet& points, double bandwidth);

// Header "x,y" then one row per point, 17 significant digits.
void write_points_csv(const PointSet& points, std::ostream& out);
PointSet read_points_csv(std::istream& in);

// Plain-text matrix format: first token n, then n*n whitespace separated values
// in row-major order.
void write_matrix(const Eigen::MatrixXd& a, std::ostream& out);
void write_matrix_file(const Eigen::MatrixXd& a, const std::filesystem::path& path);
Eigen::MatrixXd read_matrix(std::istream& in);
// Loads and certifies: symmetric within 1e-12 relative and psd within kPsdTol.
SpdMatrix load_spd_matrix_file(const std::filesystem::path& path);

} // namespace rpchol

#pragma once

#include <cstddef>
#include <string>

#include "rpchol/analysis.hpp"
#include "rpchol/random.hpp"
#include "rpchol/spd_matrix.hpp"

// Random psd test ensembles for the property sweeps.
namespace rpchol::sweep {

enum class Kind {
  Spread,        // Q^T D Q, eigenvalues uniform on (0, 10)
  MultiScale,    // eigenvalues 10^u, u uniform on (-3, 3)
  PowerLaw,      // eigenvalues c * i^-gamma
  RankDeficient, // rank r in [2, n-1] with distinct positive eigenvalues, rest zero
  ZeroRows,      // psd block embedded with exactly-zero rows and columns
  Wishart,       // G G^T with G n x r standard normal, r in [2, 2n]
  Diagonal,      // non-negative diagonal with some zeros
};

inline constexpr std::size_t kKindCount = 7;

Kind kind_for(std::size_t index);
std::string to_string(Kind kind);

SpdMatrix random_psd(std::size_t n, Kind kind, Rng& rng);

// Random pivot distribution supported on the active diagonal of a: dense or
// sparse random weights, an indicator, or A_ii^beta for random beta.
analysis::PivotDistribution random_distribution(const SpdMatrix& a, Rng& rng);

// Random non-negative vector with at least one positive entry.
std::vector<double> random_diagonal(std::size_t n, Rng& rng);

} // namespace rpchol::sweep

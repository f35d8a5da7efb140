#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rpchol/random.hpp"

namespace rpchol {

// Indices with d_i > active_tol * max(max_j d_j, reference_max) are eligible
// pivots. Engines pass the largest diagonal of the original matrix as
// reference_max, so round-off left in an exhausted residual never qualifies.
inline constexpr double kDefaultActiveTol = 1e-12;
// Diagonal values within this relative distance of the maximum count as tied.
inline constexpr double kTieTol = 1e-12;

// Uniform over the active set.
struct Uniform {};

// P(s = i) proportional to d_i^beta over the active set.
struct Gibbs {
  double beta = 1.0;
};

enum class TieBreak { LargestIndex, RandomAmongMax };

struct Greedy {
  TieBreak tie_break = TieBreak::LargestIndex;
};

// argmax |row_i|^2 / d_i. Needs the full residual row norms.
struct DiagNormRatio {};

using BaseRule = std::variant<Uniform, Gibbs, Greedy, DiagNormRatio>;

// Even steps use first, odd steps use second.
struct Alternating {
  BaseRule first = Greedy{};
  BaseRule second = Uniform{};
};

using PivotRule = std::variant<Uniform, Gibbs, Greedy, DiagNormRatio, Alternating>;

struct PivotContext {
  std::span<const double> diag;
  std::optional<std::span<const double>> row_norms_sq;
  std::size_t step = 0;
  double active_tol = kDefaultActiveTol;
  double reference_max = 0.0;
};

std::vector<std::size_t> active_set(std::span<const double> diag, double active_tol = kDefaultActiveTol,
                                    double reference_max = 0.0);
bool is_active(std::span<const double> diag, std::size_t i, double active_tol = kDefaultActiveTol,
               double reference_max = 0.0);

// Throws NoValidPivot on an empty active set and MissingInformation when the
// rule needs row norms the context does not carry.
std::size_t select_pivot(const PivotRule& rule, const PivotContext& ctx, Rng& rng);

// 0 -> Uniform, finite beta -> Gibbs(beta), infinity -> Greedy(LargestIndex).
PivotRule rule_from_beta(double beta);

// Spellings: uniform, gibbs:<beta>, greedy:last, greedy:random,
// alt:<ruleA>+<ruleB>, diagnormratio.
PivotRule parse_rule(std::string_view spelling);
std::string to_string(const PivotRule& rule);

bool needs_row_norms(const PivotRule& rule);

} // namespace rpchol

#include "rpchol/pivoting.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "rpchol/errors.hpp"

namespace rpchol {

namespace {

template <class... Ts> struct Overloaded : Ts... { using Ts::operator()...; };
template <class... Ts> Overloaded(Ts...) -> Overloaded<Ts...>;

double max_diag(std::span<const double> diag) {
  double m = 0.0;
  for (double v : diag) m = std::max(m, v);
  return m;
}

std::vector<std::size_t> tied_maxima(std::span<const double> values, const std::vector<std::size_t>& candidates) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i : candidates) best = std::max(best, values[i]);
  std::vector<std::size_t> tied;
  const double floor = best - kTieTol * std::abs(best);
  for (std::size_t i : candidates)
    if (values[i] >= floor) tied.push_back(i);
  return tied;
}

std::size_t select_uniform(const std::vector<std::size_t>& active, Rng& rng) {
  return active[rng.uniform_index(active.size())];
}

std::size_t select_gibbs(double beta, std::span<const double> diag, const std::vector<std::size_t>& active, Rng& rng) {
  if (std::isnan(beta) || beta < 0.0) throw InvalidParameter("beta must be >= 0");
  if (beta == 0.0) return select_uniform(active, rng);
  if (std::isinf(beta)) return tied_maxima(diag, active).back();
  // Normalise by the maximum before powering so that large beta cannot overflow.
  const double m = max_diag(diag);
  std::vector<double> weights(diag.size(), 0.0);
  for (std::size_t i : active) weights[i] = std::exp(beta * std::log(diag[i] / m));
  return weighted_sample(weights, rng);
}

std::size_t select_greedy(TieBreak tie_break, std::span<const double> diag, const std::vector<std::size_t>& active, Rng& rng) {
  const std::vector<std::size_t> tied = tied_maxima(diag, active);
  if (tie_break == TieBreak::LargestIndex) return tied.back();
  return tied[rng.uniform_index(tied.size())];
}

std::size_t select_ratio(const PivotContext& ctx, const std::vector<std::size_t>& active) {
  if (!ctx.row_norms_sq) throw MissingInformation("diagnormratio needs full residual row norms (dense engine only)");
  const std::span<const double> rows = *ctx.row_norms_sq;
  if (rows.size() != ctx.diag.size()) throw InvalidParameter("row norm vector does not match the diagonal");
  std::vector<double> ratio(ctx.diag.size(), 0.0);
  for (std::size_t i : active) ratio[i] = rows[i] / ctx.diag[i];
  return tied_maxima(ratio, active).back();
}

std::size_t select_base(const BaseRule& rule, const PivotContext& ctx, const std::vector<std::size_t>& active, Rng& rng) {
  return std::visit(Overloaded{
                        [&](const Uniform&) { return select_uniform(active, rng); },
                        [&](const Gibbs& g) { return select_gibbs(g.beta, ctx.diag, active, rng); },
                        [&](const Greedy& g) { return select_greedy(g.tie_break, ctx.diag, active, rng); },
                        [&](const DiagNormRatio&) { return select_ratio(ctx, active); },
                    },
                    rule);
}

void check_beta(double beta) {
  if (std::isnan(beta) || beta < 0.0) throw InvalidParameter("beta must be >= 0");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string base_to_string(const BaseRule& rule) {
  return std::visit(Overloaded{
                        [](const Uniform&) -> std::string { return "uniform"; },
                        [](const Gibbs& g) -> std::string { return "gibbs:" + format_double(g.beta); },
                        [](const Greedy& g) -> std::string {
                          return g.tie_break == TieBreak::LargestIndex ? "greedy:last" : "greedy:random";
                        },
                        [](const DiagNormRatio&) -> std::string { return "diagnormratio"; },
                    },
                    rule);
}

BaseRule parse_base(std::string_view s) {
  if (s == "uniform") return Uniform{};
  if (s == "greedy:last" || s == "greedy") return Greedy{TieBreak::LargestIndex};
  if (s == "greedy:random") return Greedy{TieBreak::RandomAmongMax};
  if (s == "diagnormratio") return DiagNormRatio{};
  if (s.starts_with("gibbs:")) {
    const std::string_view num = s.substr(6);
    if (num == "inf") return Greedy{TieBreak::LargestIndex};
    double beta = 0.0;
    const auto res = std::from_chars(num.data(), num.data() + num.size(), beta);
    if (res.ec != std::errc() || res.ptr != num.data() + num.size())
      throw InvalidParameter("malformed beta in rule '" + std::string(s) + "'");
    check_beta(beta);
    return Gibbs{beta};
  }
  throw InvalidParameter("unknown pivot rule '" + std::string(s) + "'");
}

} // namespace

std::vector<std::size_t> active_set(std::span<const double> diag, double active_tol, double reference_max) {
  const double threshold = active_tol * std::max(max_diag(diag), reference_max);
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < diag.size(); ++i)
    if (diag[i] > threshold && diag[i] > 0.0) active.push_back(i);
  return active;
}

bool is_active(std::span<const double> diag, std::size_t i, double active_tol, double reference_max) {
  if (i >= diag.size()) return false;
  return diag[i] > 0.0 && diag[i] > active_tol * std::max(max_diag(diag), reference_max);
}

std::size_t select_pivot(const PivotRule& rule, const PivotContext& ctx, Rng& rng) {
  const std::vector<std::size_t> active = active_set(ctx.diag, ctx.active_tol, ctx.reference_max);
  if (active.empty()) throw NoValidPivot("no active pivot: residual diagonal is exhausted");
  return std::visit(Overloaded{
                        [&](const Alternating& alt) {
                          return select_base(ctx.step % 2 == 0 ? alt.first : alt.second, ctx, active, rng);
                        },
                        [&](const auto& base) { return select_base(BaseRule(base), ctx, active, rng); },
                    },
                    rule);
}

PivotRule rule_from_beta(double beta) {
  check_beta(beta);
  if (beta == 0.0) return Uniform{};
  if (std::isinf(beta)) return Greedy{TieBreak::LargestIndex};
  return Gibbs{beta};
}

PivotRule parse_rule(std::string_view spelling) {
  if (spelling.starts_with("alt:")) {
    const std::string_view body = spelling.substr(4);
    const auto plus = body.find('+');
    if (plus == std::string_view::npos) throw InvalidParameter("alternating rule needs two sub-rules: alt:<a>+<b>");
    const std::string_view lhs = body.substr(0, plus);
    const std::string_view rhs = body.substr(plus + 1);
    if (lhs.starts_with("alt:") || rhs.starts_with("alt:"))
      throw InvalidParameter("alternating sub-rules must not be alternating");
    return Alternating{parse_base(lhs), parse_base(rhs)};
  }
  return std::visit([](const auto& r) -> PivotRule { return r; }, parse_base(spelling));
}

std::string to_string(const PivotRule& rule) {
  return std::visit(Overloaded{
                        [](const Alternating& alt) { return "alt:" + base_to_string(alt.first) + "+" + base_to_string(alt.second); },
                        [](const auto& base) { return base_to_string(BaseRule(base)); },
                    },
                    rule);
}

bool needs_row_norms(const PivotRule& rule) {
  const auto base_needs = [](const BaseRule& b) { return std::holds_alternative<DiagNormRatio>(b); };
  return std::visit(Overloaded{
                        [&](const Alternating& alt) { return base_needs(alt.first) || base_needs(alt.second); },
                        [](const DiagNormRatio&) { return true; },
                        [](const auto&) { return false; },
                    },
                    rule);
}

} // namespace rpchol

#pragma once

// Brute-force reference for MAP and partition computations on small graphs,
// written against the raw GroundRule fields rather than the solver internals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "relgraph/factor_graph.hpp"
#include "relgraph/inference.hpp"

namespace testing {

using relgraph::Assignment;
using relgraph::FactorGraph;
using relgraph::GroundRule;
using relgraph::ScoreTables;
using relgraph::VarId;

inline bool literal_clause(const GroundRule& r, std::size_t label,
                           const std::vector<std::uint8_t>& y) {
  for (VarId v : r.body_pos) {
    if (y[v]) return true;
  }
  for (VarId v : r.body_neg) {
    if (!y[v]) return true;
  }
  if (!r.label_ids.empty()) return y[r.head_vars[label]] != 0;
  return label == 1 ? y[r.head_vars[0]] != 0 : y[r.head_vars[0]] == 0;
}

inline double oracle_score(const FactorGraph& g, const ScoreTables& scores,
                           const std::vector<std::uint8_t>& y) {
  double total = 0.0;
  for (std::size_t r = 0; r < g.potentials.size(); ++r) {
    for (std::size_t l = 0; l < scores[r].size(); ++l) {
      total += scores[r][l] * (literal_clause(g.potentials[r], l, y) ? 1.0 : 0.0);
    }
  }
  return total;
}

inline bool oracle_feasible(const FactorGraph& g, const std::vector<std::uint8_t>& y) {
  for (const auto& c : g.constraints) {
    relgraph::Rational lhs;
    for (const auto& [v, a] : c.coeffs) {
      if (y[v]) lhs += a;
    }
    const bool ok = c.comparator == relgraph::Comparator::Equal     ? lhs == c.rhs
                    : c.comparator == relgraph::Comparator::LessEq ? lhs <= c.rhs
                                                                    : lhs >= c.rhs;
    if (!ok) return false;
  }
  return true;
}

inline std::size_t oracle_hamming(const std::vector<std::uint8_t>& a,
                                  const std::vector<std::uint8_t>& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

/// Calls fn(y, score) for every feasible assignment in lexicographic order
/// (y0 most significant). With `gold`, the score includes the Hamming term.
template <typename Fn>
void for_each_feasible(const FactorGraph& g, const ScoreTables& scores,
                       const std::vector<std::uint8_t>* gold, Fn&& fn) {
  const std::size_t n = g.size();
  std::vector<std::uint8_t> y(n);
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
    for (std::size_t i = 0; i < n; ++i) y[i] = (m >> (n - 1 - i)) & 1;
    if (!oracle_feasible(g, y)) continue;
    double s = oracle_score(g, scores, y);
    if (gold) s += static_cast<double>(oracle_hamming(y, *gold));
    fn(y, s);
  }
}

inline std::vector<Assignment> enumerate_feasible(const FactorGraph& g,
                                                  const ScoreTables& scores,
                                                  const std::vector<std::uint8_t>* gold = nullptr) {
  std::vector<Assignment> out;
  for_each_feasible(g, scores, gold, [&](const auto& y, double s) { out.push_back({y, s}); });
  return out;
}

/// First assignment in lexicographic order whose score beats every earlier
/// one by more than 1e-9.
inline std::optional<Assignment> brute_force_map(const FactorGraph& g, const ScoreTables& scores,
                                                 const std::vector<std::uint8_t>* gold = nullptr) {
  std::optional<Assignment> best;
  for_each_feasible(g, scores, gold, [&](const auto& y, double s) {
    if (!best || s > best->score + 1e-9) best = Assignment{y, s};
  });
  return best;
}

/// log Σ exp(score) over all feasible assignments.
inline double exact_log_partition(const FactorGraph& g, const ScoreTables& scores) {
  const auto all = enumerate_feasible(g, scores);
  double m = -INFINITY;
  for (const auto& a : all) m = std::max(m, a.score);
  double s = 0.0;
  for (const auto& a : all) s += std::exp(a.score - m);
  return m + std::log(s);
}

struct RandomGraphSpec {
  std::size_t min_vars = 1;
  std::size_t max_vars = 12;
  std::size_t max_potentials = 40;
  std::size_t max_constraints = 6;
  double weight_range = 3.0;
};

/// Random potentials (binary and multiclass, mixed-sign weights) and random
/// hard constraints over a random number of variables.
inline std::pair<FactorGraph, ScoreTables> random_graph(std::mt19937_64& rng,
                                                        const RandomGraphSpec& spec = {}) {
  using relgraph::Rational;
  std::uniform_int_distribution<std::size_t> nd(spec.min_vars, spec.max_vars);
  const std::size_t n = nd(rng);
  FactorGraph g;
  g.instance_id = "rand";
  for (std::size_t i = 0; i < n; ++i) {
    relgraph::DecisionVariable v;
    v.id = static_cast<VarId>(i);
    v.atom = {"Y", {static_cast<relgraph::SymbolId>(i)}};
    g.variables.push_back(v);
  }
  std::uniform_real_distribution<double> w(-spec.weight_range, spec.weight_range);
  std::uniform_int_distribution<std::size_t> var(0, n - 1);
  std::uniform_int_distribution<std::size_t> pd(0, spec.max_potentials);
  std::uniform_int_distribution<int> small(0, 3);
  ScoreTables scores;
  const std::size_t potentials = pd(rng);
  for (std::size_t p = 0; p < potentials; ++p) {
    GroundRule r;
    std::vector<std::uint8_t> used(n, 0);
    const bool multiclass = n >= 3 && small(rng) == 0;
    const std::size_t heads = multiclass ? 2 + static_cast<std::size_t>(small(rng) % 2) : 1;
    while (r.head_vars.size() < heads) {
      const VarId h = static_cast<VarId>(var(rng));
      if (used[h]) continue;
      used[h] = 1;
      r.head_vars.push_back(h);
    }
    if (multiclass) {
      for (std::size_t l = 0; l < heads; ++l) r.label_ids.push_back(l);
    }
    const int body = small(rng);
    for (int b = 0; b < body; ++b) {
      const VarId v = static_cast<VarId>(var(rng));
      if (used[v]) continue;
      used[v] = 1;
      (small(rng) % 2 ? r.body_pos : r.body_neg).push_back(v);
    }
    std::sort(r.body_pos.begin(), r.body_pos.end());
    std::sort(r.body_neg.begin(), r.body_neg.end());
    std::vector<double> s(r.num_labels());
    for (double& x : s) x = w(rng);
    g.potentials.push_back(std::move(r));
    scores.push_back(std::move(s));
  }
  std::uniform_int_distribution<std::size_t> cd(0, spec.max_constraints);
  const std::size_t constraints = cd(rng);
  for (std::size_t c = 0; c < constraints; ++c) {
    relgraph::LinearConstraint k;
    std::vector<int> coeff(n, 0);
    const int kind = small(rng);
    const int width = 1 + small(rng);
    for (int i = 0; i < width; ++i) {
      const std::size_t v = var(rng);
      coeff[v] = kind == 3 ? small(rng) - 1 : 1;
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (coeff[v] != 0) k.coeffs.emplace_back(static_cast<VarId>(v), Rational(coeff[v]));
    }
    if (k.coeffs.empty()) continue;
    switch (kind) {
      case 0:  // at most one
        k.comparator = relgraph::Comparator::LessEq;
        k.rhs = Rational(1);
        break;
      case 1:  // at least one
        k.comparator = relgraph::Comparator::GreaterEq;
        k.rhs = Rational(1);
        break;
      case 2:  // exactly one
        k.comparator = relgraph::Comparator::Equal;
        k.rhs = Rational(1);
        break;
      default:  // signed coefficients
        k.comparator = small(rng) % 2 ? relgraph::Comparator::LessEq
                                      : relgraph::Comparator::GreaterEq;
        k.rhs = Rational(small(rng) - 1);
        break;
    }
    k.origin = "c" + std::to_string(c);
    g.constraints.push_back(std::move(k));
  }
  return {std::move(g), std::move(scores)};
}

}  // namespace testing

#include "relgraph/factor_graph.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace relgraph {

std::string to_string(const GroundAtom& atom, const Datastore& data) {
  std::vector<std::string> args;
  for (SymbolId s : atom.args) args.push_back(fmt::format("\"{}\"", data.name(s)));
  return fmt::format("{}({})", atom.predicate, fmt::join(args, ","));
}

bool Clause::satisfied(std::span<const std::uint8_t> y) const {
  return satisfied_count(y) >= 1;
}

int Clause::satisfied_count(std::span<const std::uint8_t> y) const {
  int s = 0;
  for (VarId v : pos) s += y[v] ? 1 : 0;
  for (VarId v : neg) s += y[v] ? 0 : 1;
  return s;
}

std::vector<VarId> GroundRule::pos_vars() const {
  std::vector<VarId> out = body_pos;
  if (!multiclass()) out.push_back(head_var());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<VarId> GroundRule::neg_vars() const {
  std::vector<VarId> out = body_neg;
  std::sort(out.begin(), out.end());
  return out;
}

Clause GroundRule::clause_for_label(std::size_t label) const {
  Clause c{body_pos, body_neg};
  if (multiclass()) {
    c.pos.push_back(head_vars.at(label));
  } else if (label == 1) {
    c.pos.push_back(head_var());
  } else {
    c.neg.push_back(head_var());
  }
  return c;
}

bool LinearConstraint::satisfied(std::span<const std::uint8_t> y) const {
  Rational lhs;
  for (const auto& [v, a] : coeffs) {
    if (y[v]) lhs += a;
  }
  switch (comparator) {
    case Comparator::LessEq: return lhs <= rhs;
    case Comparator::GreaterEq: return lhs >= rhs;
    case Comparator::Equal: return lhs == rhs;
  }
  return false;
}

std::string to_string(const LinearConstraint& c) {
  std::string out;
  for (const auto& [v, a] : c.coeffs) {
    out += fmt::format("{}{}*y{} ", a < Rational(0) ? "" : "+", a.str(), v);
  }
  if (c.coeffs.empty()) out = "0 ";
  return out + fmt::format("{} {}", to_string(c.comparator), c.rhs.str());
}

bool FactorGraph::feasible(std::span<const std::uint8_t> y) const {
  for (const auto& c : constraints) {
    if (!c.satisfied(y)) return false;
  }
  return true;
}

std::optional<std::vector<std::uint8_t>> FactorGraph::gold_assignment() const {
  std::vector<std::uint8_t> y(variables.size());
  for (const auto& v : variables) {
    if (!v.gold) return std::nullopt;
    y[v.id] = static_cast<std::uint8_t>(*v.gold);
  }
  return y;
}

LinearConstraint rule_to_inequality(const Clause& clause, std::string origin) {
  LinearConstraint c;
  c.comparator = Comparator::GreaterEq;
  std::vector<std::pair<VarId, Rational>> terms;
  for (VarId v : clause.pos) terms.emplace_back(v, Rational(1));
  for (VarId v : clause.neg) terms.emplace_back(v, Rational(-1));
  std::sort(terms.begin(), terms.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [v, a] : terms) {
    if (!c.coeffs.empty() && c.coeffs.back().first == v) {
      c.coeffs.back().second += a;
      if (c.coeffs.back().second.is_zero()) c.coeffs.pop_back();
    } else {
      c.coeffs.emplace_back(v, a);
    }
  }
  c.rhs = Rational(1) - Rational(static_cast<std::int64_t>(clause.neg.size()));
  c.origin = std::move(origin);
  return c;
}

LinearConstraint rule_to_inequality(const GroundRule& rule, std::string origin) {
  return rule_to_inequality(Clause{rule.pos_vars(), rule.neg_vars()},
                            std::move(origin));
}

}  // namespace relgraph

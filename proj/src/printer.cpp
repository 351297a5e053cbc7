#include <algorithm>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "relgraph/program.hpp"

namespace relgraph {

namespace {

std::string term_text(const Term& t) {
  switch (t.kind) {
    case Term::Kind::Constant: return fmt::format("\"{}\"", t.text);
    case Term::Kind::SumVariable: return "+" + t.text;
    case Term::Kind::Variable: return t.text;
  }
  return t.text;
}

std::string rule_text(const RuleTemplate& r) {
  std::string out = r.weighted ? "rule" : "hardconstraint";
  if (!r.label.empty()) out += " " + r.label;
  out += ":";
  std::vector<std::string> items;
  for (const auto& l : r.body) items.push_back(to_string(l));
  for (const auto& g : r.guards) {
    items.push_back(fmt::format("({} {} {})", term_text(g.lhs),
                                g.equal ? "=" : "!=", term_text(g.rhs)));
  }
  if (!items.empty()) out += " " + fmt::format("{}", fmt::join(items, " & "));
  out += " => " + to_string(r.head);
  return out;
}

std::string arith_text(const ArithmeticConstraint& c) {
  std::string out = "arith";
  if (!c.label.empty()) out += " " + c.label;
  out += ":";
  bool first = true;
  for (const auto& t : c.terms) {
    const bool neg = t.coefficient < Rational(0);
    const Rational mag = neg ? -t.coefficient : t.coefficient;
    if (first) {
      out += neg ? " -" : " ";
    } else {
      out += neg ? " - " : " + ";
    }
    if (mag != Rational(1)) out += mag.str() + " * ";
    out += to_string(t.atom);
    first = false;
  }
  out += fmt::format(" {} {}", to_string(c.comparator), c.rhs.str());
  return out;
}

}  // namespace

std::string to_string(const Atom& atom) {
  std::vector<std::string> args;
  for (const auto& t : atom.args) args.push_back(term_text(t));
  return fmt::format("{}({}){}", atom.predicate, fmt::join(args, ", "),
                     atom.open_marker ? "?" : "");
}

std::string to_string(const Literal& literal) {
  return (literal.negated ? "~" : "") + to_string(literal.atom);
}

std::string pretty_print(const AbstractProgram& program) {
  std::string out;
  for (const auto& e : program.entities) {
    out += "entity " + e.name;
    if (e.kind == EntityKind::Attributed) {
      out += fmt::format(" features={}", e.feature_dim);
    } else if (e.vocab) {
      out += " vocab";
    }
    out += "\n";
  }
  for (const auto& p : program.predicates) {
    out += fmt::format("predicate {}({}){}\n", p.name,
                       fmt::join(p.arg_types, ", "), p.is_open() ? "?" : "");
  }
  // Rules and arithmetic constraints interleave in their original order.
  std::vector<std::pair<std::size_t, std::string>> statements;
  for (const auto& r : program.rules) statements.emplace_back(r.ordinal, rule_text(r));
  for (const auto& c : program.arith) statements.emplace_back(c.ordinal, arith_text(c));
  std::stable_sort(statements.begin(), statements.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [ord, text] : statements) out += text + "\n";
  return out;
}

}  // namespace relgraph

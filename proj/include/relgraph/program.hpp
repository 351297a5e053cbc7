#pragma once

// Abstract syntax for relational programs: typed entities, relation schemas,
// horn-clause templates and linear arithmetic constraints.

#include <optional>
#include <string>
#include <vector>

#include "relgraph/error.hpp"
#include "relgraph/rational.hpp"

namespace relgraph {

enum class EntityKind { Symbolic, Attributed };

struct EntityDecl {
  std::string name;
  EntityKind kind = EntityKind::Symbolic;
  std::size_t feature_dim = 0;  // attributed only
  bool vocab = false;           // `vocab` marker on a symbolic type
  SourceSpan span;

  friend bool operator==(const EntityDecl& a, const EntityDecl& b) {
    return a.name == b.name && a.kind == b.kind &&
           a.feature_dim == b.feature_dim && a.vocab == b.vocab;
  }
};

enum class Openness { Closed, Open };

struct PredicateDecl {
  std::string name;
  std::vector<std::string> arg_types;
  Openness openness = Openness::Closed;
  SourceSpan span;

  bool is_open() const { return openness == Openness::Open; }
  friend bool operator==(const PredicateDecl& a, const PredicateDecl& b) {
    return a.name == b.name && a.arg_types == b.arg_types &&
           a.openness == b.openness;
  }
};

struct Term {
  enum class Kind { Constant, Variable, SumVariable };
  Kind kind = Kind::Variable;
  std::string text;  // constant value without quotes, or variable name

  bool is_constant() const { return kind == Kind::Constant; }
  bool is_variable() const { return kind == Kind::Variable; }
  bool is_sum() const { return kind == Kind::SumVariable; }

  static Term constant(std::string v) { return {Kind::Constant, std::move(v)}; }
  static Term variable(std::string v) { return {Kind::Variable, std::move(v)}; }
  static Term sum(std::string v) { return {Kind::SumVariable, std::move(v)}; }

  friend bool operator==(const Term&, const Term&) = default;
  friend auto operator<=>(const Term&, const Term&) = default;
};

struct Atom {
  std::string predicate;
  std::vector<Term> args;
  bool open_marker = false;  // inline `?` annotation
  SourceSpan span;

  bool is_ground() const {
    for (const auto& t : args) {
      if (!t.is_constant()) return false;
    }
    return true;
  }
  friend bool operator==(const Atom& a, const Atom& b) {
    return a.predicate == b.predicate && a.args == b.args &&
           a.open_marker == b.open_marker;
  }
};

struct Literal {
  Atom atom;
  bool negated = false;

  Literal negate() const { return {atom, !negated}; }
  friend bool operator==(const Literal&, const Literal&) = default;
};

/// Built-in (in)equality test between two terms, e.g. `(C1 = C2)`.
struct Guard {
  Term lhs;
  Term rhs;
  bool equal = true;
  SourceSpan span;

  friend bool operator==(const Guard& a, const Guard& b) {
    return a.lhs == b.lhs && a.rhs == b.rhs && a.equal == b.equal;
  }
};

/// `rule` (weighted) or `hardconstraint` horn clause: body => head.
struct RuleTemplate {
  std::string label;  // optional user label, empty if none
  bool weighted = true;
  std::vector<Literal> body;
  std::vector<Guard> guards;
  Literal head;
  std::size_t ordinal = 0;  // position among rule/constraint statements
  SourceSpan span;

  friend bool operator==(const RuleTemplate& a, const RuleTemplate& b) {
    return a.label == b.label && a.weighted == b.weighted &&
           a.body == b.body && a.guards == b.guards && a.head == b.head &&
           a.ordinal == b.ordinal;
  }
};

enum class Comparator { LessEq, GreaterEq, Equal };

std::string_view to_string(Comparator c);

struct ArithTerm {
  Rational coefficient{1};
  Atom atom;

  friend bool operator==(const ArithTerm&, const ArithTerm&) = default;
};

struct ArithmeticConstraint {
  std::string label;
  std::vector<ArithTerm> terms;
  Comparator comparator = Comparator::Equal;
  Rational rhs;
  std::size_t ordinal = 0;
  SourceSpan span;

  friend bool operator==(const ArithmeticConstraint& a,
                         const ArithmeticConstraint& b) {
    return a.label == b.label && a.terms == b.terms &&
           a.comparator == b.comparator && a.rhs == b.rhs &&
           a.ordinal == b.ordinal;
  }
};

/// Parsed but unchecked program.
struct AbstractProgram {
  std::vector<EntityDecl> entities;
  std::vector<PredicateDecl> predicates;
  std::vector<RuleTemplate> rules;
  std::vector<ArithmeticConstraint> arith;

  bool empty() const {
    return entities.empty() && predicates.empty() && rules.empty() &&
           arith.empty();
  }
  friend bool operator==(const AbstractProgram&,
                         const AbstractProgram&) = default;
};

AbstractProgram parse_program(std::string_view source);

/// Renders a program in the surface syntax; the output reparses to an equal
/// AbstractProgram.
std::string pretty_print(const AbstractProgram& program);
std::string to_string(const Atom& atom);
std::string to_string(const Literal& literal);

/// The clause ¬b1 ∨ ... ∨ ¬bn ∨ head. Guards are not literals and are omitted.
std::vector<Literal> to_disjunctive_form(const RuleTemplate& rule);

}  // namespace relgraph

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "relgraph/checked_program.hpp"

namespace relgraph {

namespace {

using TypeMap = std::map<std::string, std::string>;

class RuleChecker {
 public:
  RuleChecker(const std::map<std::string, EntityDecl>& entities,
              const std::map<std::string, PredicateDecl>& predicates)
      : entities_(entities), predicates_(predicates) {}

  const PredicateDecl& check_atom(const Atom& atom, TypeMap& types,
                                  bool allow_sum) const {
    auto it = predicates_.find(atom.predicate);
    if (it == predicates_.end()) {
      throw Error(ErrorKind::UndeclaredPredicate,
                  fmt::format("predicate '{}' is not declared", atom.predicate),
                  atom.span);
    }
    const PredicateDecl& decl = it->second;
    if (decl.arg_types.size() != atom.args.size()) {
      throw Error(ErrorKind::TypeMismatch,
                  fmt::format("'{}' expects {} arguments, got {}", decl.name,
                              decl.arg_types.size(), atom.args.size()),
                  atom.span);
    }
    if (atom.open_marker && !decl.is_open()) {
      throw Error(ErrorKind::OpennessConflict,
                  fmt::format("'{}' is marked '?' but declared closed",
                              decl.name),
                  atom.span);
    }
    for (std::size_t i = 0; i < atom.args.size(); ++i) {
      const Term& t = atom.args[i];
      if (t.is_sum() && !allow_sum) {
        throw Error(ErrorKind::InvalidConstraint,
                    fmt::format("sum variable '+{}' outside an arith constraint",
                                t.text),
                    atom.span);
      }
      if (t.is_constant()) continue;
      bind_type(t.text, decl.arg_types[i], types, atom.span);
    }
    return decl;
  }

  static void bind_type(const std::string& var, const std::string& type,
                        TypeMap& types, SourceSpan span) {
    auto [it, inserted] = types.emplace(var, type);
    if (!inserted && it->second != type) {
      throw Error(ErrorKind::TypeMismatch,
                  fmt::format("variable '{}' used as both {} and {}", var,
                              it->second, type),
                  span);
    }
  }

  TypeMap check_rule(const RuleTemplate& rule) const {
    TypeMap types;
    std::set<std::string> bound;
    for (const auto& lit : rule.body) {
      const PredicateDecl& decl = check_atom(lit.atom, types, false);
      if (!lit.negated || decl.is_open()) {
        for (const auto& t : lit.atom.args) {
          if (t.is_variable()) bound.insert(t.text);
        }
      }
    }
    const PredicateDecl& head = check_atom(rule.head.atom, types, false);
    if (!head.is_open()) {
      throw Error(ErrorKind::ClosedHeadRelation,
                  fmt::format("head relation '{}' is closed", head.name),
                  rule.head.atom.span);
    }
    if (rule.weighted && rule.head.negated) {
      throw Error(ErrorKind::NegatedWeightedHead,
                  "weighted rules must have a positive head",
                  rule.head.atom.span);
    }
    for (const auto& t : rule.head.atom.args) {
      if (t.is_variable() && !bound.contains(t.text)) {
        throw Error(ErrorKind::UnboundHeadVariable,
                    fmt::format("head variable '{}' does not occur in the body",
                                t.text),
                    rule.head.atom.span);
      }
    }
    for (const auto& lit : rule.body) {
      if (!lit.negated) continue;
      for (const auto& t : lit.atom.args) {
        if (t.is_variable() && !bound.contains(t.text)) {
          throw Error(ErrorKind::UnboundVariable,
                      fmt::format("variable '{}' in negated closed literal is "
                                  "not bound by a positive literal",
                                  t.text),
                      lit.atom.span);
        }
      }
    }
    for (const auto& g : rule.guards) {
      for (const Term* t : {&g.lhs, &g.rhs}) {
        if (t->is_variable() && !bound.contains(t->text)) {
          throw Error(ErrorKind::UnboundVariable,
                      fmt::format("guard variable '{}' is not bound", t->text),
                      g.span);
        }
      }
      if (g.lhs.is_variable() && g.rhs.is_variable() &&
          types.at(g.lhs.text) != types.at(g.rhs.text)) {
        throw Error(ErrorKind::TypeMismatch,
                    fmt::format("guard compares {} with {}",
                                types.at(g.lhs.text), types.at(g.rhs.text)),
                    g.span);
      }
    }
    return types;
  }

  TypeMap check_arith(const ArithmeticConstraint& c) const {
    TypeMap types;
    bool any_open = false;
    for (const auto& term : c.terms) {
      // Sum variables are scoped to their atom; plain variables are shared.
      TypeMap local;
      const PredicateDecl& decl = check_atom(term.atom, local, true);
      any_open = any_open || decl.is_open();
      for (std::size_t i = 0; i < term.atom.args.size(); ++i) {
        const Term& t = term.atom.args[i];
        if (t.is_variable()) bind_type(t.text, decl.arg_types[i], types, term.atom.span);
      }
    }
    if (!any_open) {
      throw Error(ErrorKind::InvalidConstraint,
                  "arith constraint must reference an open relation", c.span);
    }
    return types;
  }

 private:
  const std::map<std::string, EntityDecl>& entities_;
  const std::map<std::string, PredicateDecl>& predicates_;
};

// Variables renamed by first occurrence and `?` annotations dropped, so
// templates equal up to variable naming compare equal.
RuleTemplate canonical(const RuleTemplate& rule) {
  RuleTemplate out = rule;
  std::map<std::string, std::string> names;
  auto rename = [&](Term& t) {
    if (t.is_constant()) return;
    auto [it, inserted] = names.emplace(t.text, "");
    if (inserted) it->second = fmt::format("V{}", names.size() - 1);
    t.text = it->second;
  };
  for (auto& lit : out.body) {
    lit.atom.open_marker = false;
    for (auto& t : lit.atom.args) rename(t);
  }
  for (auto& g : out.guards) {
    rename(g.lhs);
    rename(g.rhs);
  }
  out.head.atom.open_marker = false;
  for (auto& t : out.head.atom.args) rename(t);
  return out;
}

bool same_template(const RuleTemplate& a, const RuleTemplate& b) {
  const RuleTemplate ca = canonical(a);
  const RuleTemplate cb = canonical(b);
  return ca.body == cb.body && ca.guards == cb.guards && ca.head == cb.head;
}

// A weighted template is multiclass when some constraint `P(.., +V, ..) = 1`
// covers its head predicate and the head holds a variable at the sum position
// that no open body literal mentions.
std::optional<std::size_t> find_label_position(
    const Template& t, const std::vector<Constraint>& constraints,
    const std::map<std::string, PredicateDecl>& predicates,
    const std::map<std::string, EntityDecl>& entities) {
  const Atom& head = t.rule.head.atom;
  for (const auto& c : constraints) {
    if (!c.is_arith()) continue;
    const auto& a = *c.arith;
    if (a.terms.size() != 1 || a.comparator != Comparator::Equal ||
        a.rhs != Rational(1) || a.terms[0].coefficient != Rational(1)) {
      continue;
    }
    const Atom& atom = a.terms[0].atom;
    if (atom.predicate != head.predicate) continue;
    std::optional<std::size_t> pos;
    bool shape_ok = true;
    for (std::size_t i = 0; i < atom.args.size(); ++i) {
      if (atom.args[i].is_sum()) {
        if (pos) shape_ok = false;
        pos = i;
      } else if (!atom.args[i].is_variable()) {
        shape_ok = false;
      }
    }
    if (!shape_ok || !pos || !head.args[*pos].is_variable()) continue;
    const std::string& label_var = head.args[*pos].text;
    bool used_in_open_body = false;
    for (const auto& lit : t.rule.body) {
      if (!predicates.at(lit.atom.predicate).is_open()) continue;
      for (const auto& arg : lit.atom.args) {
        if (arg.is_variable() && arg.text == label_var) used_in_open_body = true;
      }
    }
    if (used_in_open_body) continue;
    const auto& type = predicates.at(head.predicate).arg_types[*pos];
    if (entities.at(type).kind != EntityKind::Symbolic) continue;
    return pos;
  }
  return std::nullopt;
}

}  // namespace

const EntityDecl& CheckedProgram::entity(const std::string& name) const {
  auto it = entities_.find(name);
  if (it == entities_.end()) {
    throw Error(ErrorKind::UndeclaredEntity, "unknown entity type " + name);
  }
  return it->second;
}

const PredicateDecl& CheckedProgram::predicate(const std::string& name) const {
  auto it = predicates_.find(name);
  if (it == predicates_.end()) {
    throw Error(ErrorKind::UndeclaredPredicate, "unknown predicate " + name);
  }
  return it->second;
}

std::size_t CheckedProgram::template_index(const std::string& id) const {
  for (std::size_t i = 0; i < templates_.size(); ++i) {
    if (templates_[i].id == id) return i;
  }
  throw Error(ErrorKind::MissingSpec, "unknown template " + id);
}

const Template& CheckedProgram::template_by_id(const std::string& id) const {
  return templates_[template_index(id)];
}

std::map<std::string, std::vector<std::string>>
CheckedProgram::program_constants() const {
  std::map<std::string, std::set<std::string>> seen;
  auto visit_atom = [&](const Atom& atom) {
    const auto& decl = predicates_.at(atom.predicate);
    for (std::size_t i = 0; i < atom.args.size(); ++i) {
      if (atom.args[i].is_constant()) {
        seen[decl.arg_types[i]].insert(atom.args[i].text);
      }
    }
  };
  auto visit_rule = [&](const RuleTemplate& r,
                        const std::map<std::string, std::string>& types) {
    for (const auto& l : r.body) visit_atom(l.atom);
    visit_atom(r.head.atom);
    for (const auto& g : r.guards) {
      if (g.lhs.is_constant() && g.rhs.is_variable()) {
        seen[types.at(g.rhs.text)].insert(g.lhs.text);
      }
      if (g.rhs.is_constant() && g.lhs.is_variable()) {
        seen[types.at(g.lhs.text)].insert(g.rhs.text);
      }
    }
  };
  for (const auto& t : templates_) visit_rule(t.rule, t.var_types);
  for (const auto& c : constraints_) {
    if (c.clause) visit_rule(*c.clause, c.var_types);
    if (c.arith) {
      for (const auto& term : c.arith->terms) visit_atom(term.atom);
    }
  }
  std::map<std::string, std::vector<std::string>> out;
  for (auto& [type, values] : seen) out[type] = {values.begin(), values.end()};
  return out;
}

CheckedProgram validate(const AbstractProgram& program) {
  CheckedProgram out;
  out.source_ = program;

  for (const auto& e : program.entities) {
    if (e.kind == EntityKind::Attributed && e.feature_dim == 0) {
      throw Error(ErrorKind::DimensionError,
                  fmt::format("attributed entity '{}' needs features > 0", e.name),
                  e.span);
    }
    if (!out.entities_.emplace(e.name, e).second) {
      throw Error(ErrorKind::DuplicateDeclaration,
                  fmt::format("entity '{}' declared twice", e.name), e.span);
    }
  }
  for (const auto& p : program.predicates) {
    if (!out.predicates_.emplace(p.name, p).second) {
      throw Error(ErrorKind::DuplicateDeclaration,
                  fmt::format("predicate '{}' declared twice", p.name), p.span);
    }
  }
  // Argument types are checked after all declarations are known; iterate in
  // name order so the first reported error is independent of source order.
  for (const auto& [name, p] : out.predicates_) {
    for (const auto& type : p.arg_types) {
      if (!out.entities_.contains(type)) {
        throw Error(ErrorKind::UndeclaredEntity,
                    fmt::format("predicate '{}' uses undeclared type '{}'",
                                name, type),
                    p.span);
      }
    }
  }

  RuleChecker checker(out.entities_, out.predicates_);

  // Rules and arithmetic constraints in statement order.
  std::vector<std::pair<std::size_t, const RuleTemplate*>> rules;
  std::vector<std::pair<std::size_t, const ArithmeticConstraint*>> ariths;
  for (const auto& r : program.rules) rules.emplace_back(r.ordinal, &r);
  for (const auto& a : program.arith) ariths.emplace_back(a.ordinal, &a);
  std::size_t ri = 0;
  std::size_t ai = 0;
  std::set<std::string> labels;
  auto claim_label = [&](const std::string& label, SourceSpan span) {
    if (!labels.insert(label).second) {
      throw Error(ErrorKind::DuplicateDeclaration,
                  fmt::format("label '{}' used twice", label), span);
    }
  };
  std::size_t weighted_count = 0;
  while (ri < rules.size() || ai < ariths.size()) {
    const bool take_rule =
        ai >= ariths.size() ||
        (ri < rules.size() && rules[ri].first < ariths[ai].first);
    if (take_rule) {
      const RuleTemplate& r = *rules[ri++].second;
      auto types = checker.check_rule(r);
      if (r.weighted) {
        for (const auto& prior : out.templates_) {
          if (same_template(prior.rule, r)) {
            throw Error(ErrorKind::DuplicateTemplate,
                        fmt::format("template duplicates '{}'", prior.id),
                        r.span);
          }
        }
        Template t;
        t.id = r.label.empty() ? fmt::format("rule{}", weighted_count) : r.label;
        ++weighted_count;
        claim_label(t.id, r.span);
        t.rule = r;
        t.var_types = std::move(types);
        out.templates_.push_back(std::move(t));
      } else {
        Constraint c;
        c.id = r.label.empty() ? fmt::format("c{}", out.constraints_.size())
                               : r.label;
        claim_label(c.id, r.span);
        c.clause = r;
        c.var_types = std::move(types);
        out.constraints_.push_back(std::move(c));
      }
    } else {
      const ArithmeticConstraint& a = *ariths[ai++].second;
      Constraint c;
      c.var_types = checker.check_arith(a);
      c.id = a.label.empty() ? fmt::format("c{}", out.constraints_.size())
                             : a.label;
      claim_label(c.id, a.span);
      c.arith = a;
      out.constraints_.push_back(std::move(c));
    }
  }

  for (auto& t : out.templates_) {
    t.label_position = find_label_position(t, out.constraints_,
                                           out.predicates_, out.entities_);
  }
  return out;
}

}  // namespace relgraph

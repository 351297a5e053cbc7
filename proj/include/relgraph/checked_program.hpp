#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relgraph/program.hpp"

namespace relgraph {

/// A weighted rule template after validation.
struct Template {
  std::string id;
  RuleTemplate rule;
  std::map<std::string, std::string> var_types;  // variable -> entity type
  /// Head argument that ranges over a label set when an `= 1` summation
  /// constraint makes the head relation one-hot (multiclass scoring).
  std::optional<std::size_t> label_position;
};

/// A hard constraint: either a horn clause or an arithmetic constraint.
struct Constraint {
  std::string id;
  std::optional<RuleTemplate> clause;
  std::optional<ArithmeticConstraint> arith;
  std::map<std::string, std::string> var_types;

  bool is_arith() const { return arith.has_value(); }
};

/// Validated, immutable program. Declarations are keyed by name, so the
/// result does not depend on declaration order.
class CheckedProgram {
 public:
  const std::map<std::string, EntityDecl>& entities() const { return entities_; }
  const std::map<std::string, PredicateDecl>& predicates() const { return predicates_; }
  const std::vector<Template>& templates() const { return templates_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const AbstractProgram& source() const { return source_; }

  const EntityDecl& entity(const std::string& name) const;
  const PredicateDecl& predicate(const std::string& name) const;
  const Template& template_by_id(const std::string& id) const;
  std::size_t template_index(const std::string& id) const;

  /// Constants written in rule/constraint text, grouped by entity type.
  std::map<std::string, std::vector<std::string>> program_constants() const;

 private:
  friend CheckedProgram validate(const AbstractProgram& program);

  AbstractProgram source_;
  std::map<std::string, EntityDecl> entities_;
  std::map<std::string, PredicateDecl> predicates_;
  std::vector<Template> templates_;
  std::vector<Constraint> constraints_;
};

CheckedProgram validate(const AbstractProgram& program);

}  // namespace relgraph

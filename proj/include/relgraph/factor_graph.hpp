#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relgraph/datastore.hpp"
#include "relgraph/program.hpp"
#include "relgraph/rational.hpp"

namespace relgraph {

using VarId = std::uint32_t;

struct GroundAtom {
  std::string predicate;
  Row args;

  friend bool operator==(const GroundAtom&, const GroundAtom&) = default;
  friend auto operator<=>(const GroundAtom&, const GroundAtom&) = default;
};

std::string to_string(const GroundAtom& atom, const Datastore& data);

/// One binary unknown: a candidate ground atom of an open relation.
struct DecisionVariable {
  VarId id = 0;
  GroundAtom atom;
  std::optional<int> gold;
};

/// A disjunction over open atoms: OR(y_i for i in pos) OR (NOT y_i for i in neg).
struct Clause {
  std::vector<VarId> pos;
  std::vector<VarId> neg;

  bool satisfied(std::span<const std::uint8_t> y) const;
  /// Σ_pos y + Σ_neg (1 - y)
  int satisfied_count(std::span<const std::uint8_t> y) const;
  std::size_t size() const { return pos.size() + neg.size(); }
};

/// One grounding of a weighted template.
struct GroundRule {
  std::size_t template_index = 0;
  /// Open body atoms that appear negated / positive in the body. In the
  /// disjunctive form these land in I+ / I- respectively.
  std::vector<VarId> body_pos;
  std::vector<VarId> body_neg;
  /// Binary rules: the single head variable. Multiclass rules: one variable
  /// per label alternative, ordered by label index.
  std::vector<VarId> head_vars;
  std::vector<std::size_t> label_ids;  // multiclass only
  /// Ground arguments of each body literal (template order) and of the head.
  std::vector<Row> body_args;
  Row head_args;
  /// Values of the template variables, ordered by variable name.
  Row binding;

  bool multiclass() const { return !label_ids.empty(); }
  std::size_t num_labels() const { return multiclass() ? head_vars.size() : 2; }
  VarId head_var() const { return head_vars.front(); }

  /// I+ and I- of the head-true clause (binary), or of the body alone
  /// (multiclass).
  std::vector<VarId> pos_vars() const;
  std::vector<VarId> neg_vars() const;

  /// Clause whose truncated satisfaction ψ is weighted by label `label`'s
  /// score. Binary: label 1 = head true, label 0 = head false.
  Clause clause_for_label(std::size_t label) const;
};

struct LinearConstraint {
  std::vector<std::pair<VarId, Rational>> coeffs;  // sorted by var, nonzero
  Comparator comparator = Comparator::GreaterEq;
  Rational rhs;
  std::string origin;

  bool satisfied(std::span<const std::uint8_t> y) const;
  friend bool operator==(const LinearConstraint&, const LinearConstraint&) = default;
};

std::string to_string(const LinearConstraint& c);

struct FactorGraph {
  std::string instance_id;
  std::vector<DecisionVariable> variables;
  std::vector<GroundRule> potentials;
  std::vector<LinearConstraint> constraints;

  std::size_t size() const { return variables.size(); }
  bool feasible(std::span<const std::uint8_t> y) const;
  /// Gold labels as an assignment; nullopt if any variable lacks gold.
  std::optional<std::vector<std::uint8_t>> gold_assignment() const;
};

/// Σ_{I+} y + Σ_{I-} (1 - y) >= 1, normalized to Σ a·y >= rhs.
LinearConstraint rule_to_inequality(const Clause& clause, std::string origin = {});
LinearConstraint rule_to_inequality(const GroundRule& rule, std::string origin = {});

}  // namespace relgraph
